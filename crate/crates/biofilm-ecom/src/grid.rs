//! Spatial discretization over the growing domain [0, L].
//!
//! Uniform node spacing with node appending as the biofilm lengthens. The
//! left boundary is a zero-flux mirror; the right boundary exchanges with
//! the fluid through a boundary layer (Robin-type flux matched with a
//! centred ghost node).

use crate::error::{Error, Result};
use crate::model::{BiofilmState, Parameters};

/// Slack used when converting a length to a node count, relative to dx.
const GRID_EPS: f64 = 1e-9;

/// Uniform grid over the current biofilm length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    /// Node spacing, mm.
    pub dx: f64,
    /// Node count (node i sits at i * dx).
    pub n_nodes: usize,
    /// Current domain length, mm. Satisfies (n_nodes-1)*dx <= L < n_nodes*dx.
    pub length: f64,
}

impl Grid {
    pub fn new(dx: f64, length: f64) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::validation("grid.dx", format!("must be positive, got {dx}")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::validation(
                "grid.initial_L",
                format!("must be positive, got {length}"),
            ));
        }
        let n_nodes = Self::node_count(dx, length);
        if n_nodes < 3 {
            return Err(Error::validation(
                "grid.dx",
                format!("grid needs at least 3 nodes; dx = {dx} over L = {length} gives {n_nodes}"),
            ));
        }
        Ok(Grid { dx, n_nodes, length })
    }

    /// floor(L/dx) + 1, with slack so grid-aligned lengths land exactly.
    pub fn node_count(dx: f64, length: f64) -> usize {
        (length / dx + GRID_EPS).floor() as usize + 1
    }

    /// View of this grid at a different instantaneous length (node layout
    /// unchanged). Used for integrator stage states, where L moves within
    /// a step but nodes are only appended afterwards.
    pub fn at_length(&self, length: f64) -> Grid {
        Grid { length, ..*self }
    }

    pub fn node_x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn last_x(&self) -> f64 {
        self.node_x(self.n_nodes - 1)
    }
}

/// Right-boundary exchange with the fluid for one species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpec {
    /// Diffusivity inside the biofilm, mm²/hr.
    pub interior_diffusivity: f64,
    /// Diffusivity in the fluid, mm²/hr.
    pub fluid_diffusivity: f64,
    /// Boundary-layer width, mm.
    pub layer_width: f64,
    /// Far-field concentration, mM.
    pub far_field: f64,
}

impl BoundarySpec {
    pub fn glutamate(p: &Parameters) -> Self {
        BoundarySpec {
            interior_diffusivity: p.glutamate_diffusivity,
            fluid_diffusivity: p.glutamate_diffusivity_fluid,
            layer_width: p.boundary_layer_width,
            far_field: p.glutamate_far_field,
        }
    }

    pub fn potassium(p: &Parameters) -> Self {
        BoundarySpec {
            interior_diffusivity: p.potassium_diffusivity,
            fluid_diffusivity: p.potassium_diffusivity_fluid,
            layer_width: p.boundary_layer_width,
            far_field: p.potassium_far_field,
        }
    }
}

/// Second difference of `field` with the model's boundary conditions,
/// in mM/mm² (multiply by a diffusivity to get a rate).
///
/// Node 0 mirrors (zero flux). The last node's ghost value comes from
/// matching the interior flux to the boundary-layer flux:
/// `f[N+1] = f[N-1] + (2 dx D_fl)/(D L_b) (far_field - f[N])`.
pub fn laplacian_with_bcs(field: &[f64], grid: &Grid, bc: &BoundarySpec) -> Result<Vec<f64>> {
    let n = grid.n_nodes;
    assert_eq!(field.len(), n, "field length must match the grid");
    if let Some(bad) = field.iter().position(|v| !v.is_finite()) {
        return Err(Error::stability(
            f64::NAN,
            format!("non-finite field value at node {bad}"),
        ));
    }
    let inv_dx2 = 1.0 / (grid.dx * grid.dx);
    let mut out = vec![0.0; n];
    out[0] = 2.0 * (field[1] - field[0]) * inv_dx2;
    for i in 1..n - 1 {
        out[i] = (field[i - 1] - 2.0 * field[i] + field[i + 1]) * inv_dx2;
    }
    let ghost_offset = (2.0 * grid.dx * bc.fluid_diffusivity)
        / (bc.interior_diffusivity * bc.layer_width)
        * (bc.far_field - field[n - 1]);
    let ghost = field[n - 2] + ghost_offset;
    out[n - 1] = (field[n - 2] - 2.0 * field[n - 1] + ghost) * inv_dx2;
    Ok(out)
}

/// Biofilm elongation rate `delta_g * integral of G_i * M_g over [0, L]`,
/// mm/hr, by trapezoidal quadrature over the nodes plus the stub
/// [last node, L] at the last integrand value. Never negative.
pub fn growth_rate(g_i: &[f64], m_g: &[f64], grid: &Grid, p: &Parameters) -> f64 {
    let n = grid.n_nodes;
    assert_eq!(g_i.len(), n);
    assert_eq!(m_g.len(), n);
    let w = |i: usize| g_i[i] * m_g[i];
    let mut integral = 0.0;
    for i in 0..n - 1 {
        integral += 0.5 * (w(i) + w(i + 1));
    }
    integral *= grid.dx;
    let tail = grid.length - grid.last_x();
    if tail > 0.0 {
        integral += tail * w(n - 1);
    }
    (p.growth_yield * integral).max(0.0)
}

/// Appends one node per grid line crossed by `state.length`, each a copy of
/// the previous last node. Existing node values are untouched. Returns the
/// number of nodes appended.
pub fn extend_domain(state: &mut BiofilmState, grid: &mut Grid) -> Result<usize> {
    assert_eq!(state.nodes.len(), grid.n_nodes);
    let target = Grid::node_count(grid.dx, state.length);
    if target < grid.n_nodes {
        return Err(Error::stability(
            state.time,
            format!(
                "biofilm length decreased: {} nodes for L = {}, had {}",
                target, state.length, grid.n_nodes
            ),
        ));
    }
    let appended = target - grid.n_nodes;
    for _ in 0..appended {
        let edge = *state.nodes.last().expect("grid has at least 3 nodes");
        state.nodes.push(edge);
    }
    grid.n_nodes = target;
    grid.length = state.length;
    Ok(appended)
}
