//! Uniform `(x, theta)` meshes, the discretized density and its initial data.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::params::{InitKind, Params};

/// Tensor-product mesh on `[0, x_max] x [theta_min, theta_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub xs: Vec<f64>,
    pub thetas: Vec<f64>,
    pub dx: f64,
    pub dtheta: f64,
}

impl Grid {
    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn ntheta(&self) -> usize {
        self.thetas.len()
    }

    pub fn theta_min(&self) -> f64 {
        self.thetas[0]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx(), self.ntheta())
    }
}

/// Number of uniform cells of width `step` fitting in `len`, plus one.
/// The small slack absorbs representation error of steps like `2/3`.
fn mesh_count(len: f64, step: f64) -> usize {
    ((len / step) * (1.0 + 1e-12)).floor() as usize + 1
}

/// Builds the uniform meshes. Fails if `params` is invalid, in particular
/// when `dt` exceeds the explicit diffusion bound.
pub fn build_grid(params: &Params) -> Result<Grid> {
    params.validate()?;
    let nx = mesh_count(params.x_max, params.dx);
    let ntheta = mesh_count(params.theta_max - params.theta_min, params.dtheta);
    Ok(Grid {
        xs: (0..nx).map(|i| i as f64 * params.dx).collect(),
        thetas: (0..ntheta)
            .map(|j| params.theta_min + j as f64 * params.dtheta)
            .collect(),
        dx: params.dx,
        dtheta: params.dtheta,
    })
}

/// Discretized density, `values[[i, j]] ~ f(t, x_i, theta_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Array2<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: Array2::zeros(grid.shape()),
        }
    }

    pub fn from_array(values: Array2<f64>, grid: &Grid) -> Result<Self> {
        check_shape(values.dim(), grid)?;
        Ok(Self { values })
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Total mass under the rectangle rule.
    pub fn mass(&self, grid: &Grid) -> f64 {
        self.values.sum() * grid.dx * grid.dtheta
    }
}

pub(crate) fn check_shape(found: (usize, usize), grid: &Grid) -> Result<()> {
    if found != grid.shape() {
        return Err(Error::Shape {
            expected: format!("{:?}", grid.shape()),
            found: format!("{found:?}"),
        });
    }
    Ok(())
}

/// Local population size `rho[i] = sum_k F[i][k] * dtheta`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    pub rho: Array1<f64>,
}

impl DensityVector {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.rho.as_slice().expect("contiguous density vector")
    }
}

impl From<Vec<f64>> for DensityVector {
    fn from(v: Vec<f64>) -> Self {
        Self { rho: Array1::from(v) }
    }
}

/// Rectangle-rule population size of every spatial cell.
pub fn population_size(field: &Field, grid: &Grid) -> Result<DensityVector> {
    check_shape(field.values.dim(), grid)?;
    let rho = field.values.sum_axis(Axis(1)) * grid.dtheta;
    Ok(DensityVector { rho })
}

/// `sqrt(2/pi) exp(-(x^2 + (1 - theta)^2) / 2)` restricted to `theta >= 1`.
pub fn init_gaussian(grid: &Grid) -> Field {
    let norm = (2.0 / std::f64::consts::PI).sqrt();
    let values = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        let (x, th) = (grid.xs[i], grid.thetas[j]);
        if th >= 1.0 {
            norm * (-(x * x + (1.0 - th) * (1.0 - th)) / 2.0).exp()
        } else {
            0.0
        }
    });
    Field { values }
}

/// Single-cell indicator at `(x_0, theta_0)` carrying unit rectangle-rule mass.
pub fn init_dirac(grid: &Grid) -> Field {
    let mut field = Field::zeros(grid);
    field.values[[0, 0]] = 1.0 / (grid.dx * grid.dtheta);
    field
}

pub fn init_field(kind: InitKind, grid: &Grid) -> Field {
    match kind {
        InitKind::Gaussian => init_gaussian(grid),
        InitKind::Dirac => init_dirac(grid),
    }
}
