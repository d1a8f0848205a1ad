//! Hosts the `acceptance` test target; see `cargo test -p cmcgrasp-acceptance`.
