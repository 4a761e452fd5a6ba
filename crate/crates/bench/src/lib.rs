//! Shared fixtures for the engine benchmarks.

use airykdv_core::SigmaWeight;

/// One weight of each family, labelled for benchmark ids.
pub fn weights() -> Vec<SigmaWeight> {
    let mut out = vec![SigmaWeight::kpz()];
    out.extend(SigmaWeight::step(1.0));
    out.extend(SigmaWeight::fermi(0.5));
    out.extend(SigmaWeight::piecewise(&[(-1.0, 0.5), (0.5, 1.0)]));
    out
}
