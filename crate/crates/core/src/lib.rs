//! Ground states of the planar Chern-Simons-Schrodinger system with a
//! prescribed mass, computed by constrained minimization over the natural
//! constraint manifold on a periodic spectral grid.

pub mod error;
pub mod functional;
pub mod gauge;
pub mod grid;
pub mod io;
pub mod moser;
pub mod nonlin;
pub mod radial;
pub mod solver;

pub use error::{CssError, Result};
pub use functional::{EnergyBreakdown, LagrangeMultipliers, Projection};
pub use gauge::{GaugeFields, KernelRoute};
pub use grid::{Field2D, Grid};
pub use nonlin::{Family, NonlinearitySpec, TruncationMode};
pub use radial::{CrosscheckReport, RadialField, RadialSolution};
pub use solver::{InitKind, SolutionRecord, SolverConfig, SupercriticalRecord};
