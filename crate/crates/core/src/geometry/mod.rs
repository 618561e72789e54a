//! Cylinder grid, scalar fields and the azimuthal mode transform.
//!
//! Geometry is fixed: the horizontal section is the unit disk, the vertical
//! extent is `[0, h]`. Radial nodes sit on a half-cell-offset uniform grid
//! (no node at r = 0, last node exactly on the lateral boundary r = 1),
//! angular nodes are uniform on `[0, 2π)`, vertical nodes are uniform and
//! include both surfaces.

mod fields;
mod grid;
mod modes;

pub use fields::{ScalarField3D, Surface, SurfaceField};
pub use grid::{make_grid, CylGrid, GridError};
pub use modes::{
    circle_average, from_modes, surface_from_modes, surface_to_modes, to_modes, ModeStack,
    SurfaceModes,
};
