//! Integration over the complex measurement plane and sampling of outcomes.
//!
//! Integrals use a tensor midpoint rule on the square `[-R, R]^2`. Nodes are
//! grouped into rows; rows may be evaluated on different threads, but every
//! reduction runs row by row in grid order, so results are bit-identical
//! regardless of thread count.

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{displacement_operator, FockVector};
use crate::input::InputState;
use crate::teleport::{p_density, TeleportParams};

pub const DEFAULT_GRID_RADIUS: f64 = 8.0;
pub const DEFAULT_GRID_POINTS: usize = 160;

/// Largest tolerated shortfall of grid-captured probability before sampling refuses to run.
pub const MAX_SAMPLER_MASS_DEFICIT: f64 = 0.01;

/// One quadrature node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub beta: Complex64,
    pub weight: f64,
}

/// Midpoint rule over the square `[-radius, radius]^2` of the beta plane.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    radius: f64,
    points_per_axis: usize,
    nodes: Vec<Node>,
}

impl QuadratureGrid {
    pub fn new(radius: f64, points_per_axis: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid radius must be positive, got {radius}"
            )));
        }
        if points_per_axis == 0 {
            return Err(Error::InvalidParameter(
                "grid needs at least one point per axis".into(),
            ));
        }
        let h = 2.0 * radius / points_per_axis as f64;
        let weight = h * h;
        let coord = |i: usize| -radius + (i as f64 + 0.5) * h;
        let nodes = (0..points_per_axis)
            .flat_map(|row| {
                (0..points_per_axis).map(move |col| Node {
                    beta: Complex64::new(coord(col), coord(row)),
                    weight,
                })
            })
            .collect();
        Ok(Self {
            radius,
            points_per_axis,
            nodes,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Cell width along each axis.
    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / self.points_per_axis as f64
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Whether node `index` lies in the outermost ring of cells.
    pub fn is_boundary(&self, index: usize) -> bool {
        let n = self.points_per_axis;
        let (row, col) = (index / n, index % n);
        row == 0 || col == 0 || row + 1 == n || col + 1 == n
    }

    /// Same radius, twice the points per axis.
    pub fn refined(&self) -> Self {
        Self::new(self.radius, 2 * self.points_per_axis).expect("refining a valid grid")
    }

    /// Folds every node into an accumulator, one accumulator per grid row,
    /// then merges the row accumulators in row order.
    pub(crate) fn reduce<A, Z, F, M>(&self, zero: Z, fold: F, merge: M) -> Result<A>
    where
        A: Send,
        Z: Fn() -> A + Sync,
        F: Fn(&mut A, usize, &Node) -> Result<()> + Sync,
        M: Fn(&mut A, A),
    {
        let n = self.points_per_axis;
        let rows: Vec<Result<A>> = self
            .nodes
            .par_chunks(n)
            .enumerate()
            .map(|(row, nodes)| {
                let mut acc = zero();
                for (col, node) in nodes.iter().enumerate() {
                    fold(&mut acc, row * n + col, node)?;
                }
                Ok(acc)
            })
            .collect();
        let mut total = zero();
        for row in rows {
            merge(&mut total, row?);
        }
        Ok(total)
    }

    /// Evaluates `f` on every node, in node order.
    pub(crate) fn map_nodes<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&Node) -> Result<T> + Sync,
    {
        self.nodes.par_iter().map(&f).collect()
    }
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self::new(DEFAULT_GRID_RADIUS, DEFAULT_GRID_POINTS).expect("default grid is valid")
    }
}

/// Values that can be integrated over the plane: weighted sums with a finiteness check.
pub trait PlaneValue: Send + Sync + Sized {
    /// Additive identity shaped like `self`.
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, weight: f64, value: &Self);
    fn is_finite(&self) -> bool;
}

impl PlaneValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, weight: f64, value: &Self) {
        *self += weight * value;
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl PlaneValue for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, weight: f64, value: &Self) {
        *self += value * weight;
    }
    fn is_finite(&self) -> bool {
        Complex64::is_finite(*self)
    }
}

impl PlaneValue for Array2<Complex64> {
    fn zero_like(&self) -> Self {
        Array2::zeros(self.raw_dim())
    }
    fn add_scaled(&mut self, weight: f64, value: &Self) {
        self.scaled_add(Complex64::new(weight, 0.0), value);
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.is_finite())
    }
}

impl PlaneValue for Array2<f64> {
    fn zero_like(&self) -> Self {
        Array2::zeros(self.raw_dim())
    }
    fn add_scaled(&mut self, weight: f64, value: &Self) {
        self.scaled_add(weight, value);
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.is_finite())
    }
}

/// `sum_k w_k f(beta_k)`, accumulated in fixed node order.
pub fn integrate_plane<T, F>(grid: &QuadratureGrid, f: F) -> Result<T>
where
    T: PlaneValue,
    F: Fn(Complex64) -> T + Sync,
{
    // The shape of matrix-valued integrands is only known after one evaluation.
    let first = f(grid.nodes[0].beta);
    let template = first.zero_like();
    let sum = grid.reduce(
        || None::<T>,
        |acc, _, node| {
            let value = f(node.beta);
            if !value.is_finite() {
                return Err(Error::NonFinite(node.beta));
            }
            acc.get_or_insert_with(|| template.zero_like())
                .add_scaled(node.weight, &value);
            Ok(())
        },
        |total, row| {
            if let Some(row) = row {
                total
                    .get_or_insert_with(|| template.zero_like())
                    .add_scaled(1.0, &row);
            }
        },
    )?;
    Ok(sum.unwrap_or(template))
}

/// Seeded measurement outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub seed: u64,
    pub betas: Vec<Complex64>,
}

/// Draws `count` outcomes from the measurement density `P(beta)`.
///
/// Coherent inputs (the vacuum included) have a Gaussian density centred on
/// the input amplitude with per-axis variance `1 / (2 (1 - q^2))` and are
/// sampled exactly. Other inputs pick a grid cell with probability
/// proportional to `weight * P(centre)` and then a uniform point inside it.
pub fn sample_beta(
    params: &TeleportParams,
    input: &InputState,
    count: usize,
    seed: u64,
    grid: &QuadratureGrid,
) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let betas = match input.coherent_amplitude() {
        Some(alpha) => {
            let sigma = (0.5 / (1.0 - params.q() * params.q())).sqrt();
            (0..count)
                .map(|_| {
                    let x: f64 = rng.sample(StandardNormal);
                    let y: f64 = rng.sample(StandardNormal);
                    alpha + Complex64::new(sigma * x, sigma * y)
                })
                .collect()
        }
        None => {
            let psi = input.to_vector(params.truncation())?;
            let masses =
                grid.map_nodes(|node| Ok(node.weight * p_density(params, node.beta, &psi)?))?;
            let mut cumulative = Vec::with_capacity(masses.len());
            let mut total = 0.0;
            for m in &masses {
                total += m;
                cumulative.push(total);
            }
            if (1.0 - total).abs() > MAX_SAMPLER_MASS_DEFICIT {
                return Err(Error::GridMassDeficit { mass: total });
            }
            let h = grid.spacing();
            (0..count)
                .map(|_| {
                    let u = rng.random::<f64>() * total;
                    let cell = cumulative
                        .partition_point(|&c| c <= u)
                        .min(cumulative.len() - 1);
                    let dx = (rng.random::<f64>() - 0.5) * h;
                    let dy = (rng.random::<f64>() - 0.5) * h;
                    grid.nodes()[cell].beta + Complex64::new(dx, dy)
                })
                .collect()
        }
    };
    Ok(SampleSet { seed, betas })
}

/// Operator-norm distance between `integral T^dagger T d^2 beta` and the
/// identity, restricted to the leading `block x block` corner.
pub fn completeness_check(
    params: &TeleportParams,
    grid: &QuadratureGrid,
    block: usize,
) -> Result<f64> {
    let n = params.truncation();
    if block == 0 || block > n / 2 {
        return Err(Error::InvalidParameter(format!(
            "block {block} must lie in 1..={}",
            n / 2
        )));
    }
    let q = params.q();
    let g = params.g();
    let prefactor = ((1.0 - q * q) / std::f64::consts::PI).sqrt();
    let scales: Vec<f64> = (0..n).map(|k| prefactor * q.powi(k as i32)).collect();

    let gram = integrate_plane(grid, |beta| {
        // Columns T e_j for j < block, assembled as D(g beta) Q D(-beta)[:, ..block].
        let undo = displacement_operator(-beta, n);
        let mut middle = Array2::<Complex64>::zeros((n, block));
        for ((row, col), slot) in middle.indexed_iter_mut() {
            *slot = undo.get(row, col) * scales[row];
        }
        let columns = displacement_operator(g * beta, n).matrix().dot(&middle);
        columns.t().mapv(|z| z.conj()).dot(&columns)
    })?;

    let deviation = DMatrix::from_fn(block, block, |i, j| {
        let target = if i == j { 1.0 } else { 0.0 };
        // Hermitian part; the integral is Hermitian up to rounding.
        0.5 * (gram[[i, j]] + gram[[j, i]].conj()) - Complex64::new(target, 0.0)
    });
    let eigen = deviation.symmetric_eigenvalues();
    Ok(eigen.iter().fold(0.0_f64, |worst, e| worst.max(e.abs())))
}

/// Integral of `P(beta)` over the grid for a normalized state.
pub fn total_probability(
    params: &TeleportParams,
    psi: &FockVector,
    grid: &QuadratureGrid,
) -> Result<f64> {
    psi.normalized()?;
    let densities = grid.map_nodes(|node| p_density(params, node.beta, psi))?;
    let mut total = 0.0;
    for (node, p) in grid.nodes().iter().zip(densities) {
        total += node.weight * p;
    }
    Ok(total)
}
