pub mod bundle_eval;
pub mod contact_probe;
pub mod plan;
