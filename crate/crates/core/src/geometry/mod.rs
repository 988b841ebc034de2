//! Geometry surrogates for pilot patterns.
//!
//! Everything here is a pure function of a pattern (and the grid size `k`):
//! the asymmetric grid metric, nearest-pilot coverage, the modular-line
//! census with symmetric-triple detection, the virtual-domain coherence map,
//! and the closed-form correlation kernel of regular block-hopping patterns.

mod coherence;
mod coverage;
mod kernel;
mod lines;
mod metric;

pub use coherence::{coherence_map, CoherenceMap};
pub use coverage::{coverage, CoverageReport};
pub use kernel::{kernel_peak, legacy_kernel};
pub use lines::{
    collinearity_census, enumerate_modular_lines, symmetric_triples, CollinearityCensus,
    LineSet, ModularLine, PointTriple, SymmetricTriple,
};
pub use metric::metric_cost;

pub(crate) use metric::metric_cost_unchecked;
