//! The acceptance suite lives under `tests/`; run it with
//! `cargo test -p czgp-validation --test acceptance`.
