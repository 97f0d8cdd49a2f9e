//! Empty library; the crate exists only to host the criterion benches.
