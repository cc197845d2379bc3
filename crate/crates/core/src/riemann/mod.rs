//! Meshed Riemann surfaces, sampled 1-forms, periods, the Schwarz P data and
//! spectral monodromy.

pub mod forms;
pub mod io;
pub mod mesh;
pub mod monodromy;
pub mod psurface;

pub use forms::{
    area_density, conformality_residual, holomorphicity_residual, periods, weierstrass_forms, weierstrass_spinor,
    EigenFormSystem, FormField, PeriodLattice,
};
pub use mesh::{Chart, Loop, MeshedSurface, Node, SurfaceKind};
pub use monodromy::{critical_set, eigenform_monodromy, Permutation};
pub use psurface::{build_p_surface, PSurface};
