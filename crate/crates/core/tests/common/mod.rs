//! Independent oracles shared by the integration tests: a dense
//! matrix-product circuit simulator built from first principles, an analytic
//! two-parameter double-well landscape with a known low-loss detour, and a
//! grid Dijkstra solver for the minimax path value between two points.

use num_complex::Complex64;
use qcl_core::ansatz::Layout;
use qcl_core::connectivity::LossSurface;
use qcl_core::Result;

type C = Complex64;
type Mat = Vec<Vec<C>>;

fn eye(n: usize) -> Mat {
    let mut m = vec![vec![C::new(0.0, 0.0); n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C::new(1.0, 0.0);
    }
    m
}

fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ra, ca, rb, cb) = (a.len(), a[0].len(), b.len(), b[0].len());
    let mut out = vec![vec![C::new(0.0, 0.0); ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn matvec(m: &Mat, v: &[C]) -> Vec<C> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn ry_mat(theta: f64) -> Mat {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    vec![
        vec![C::new(c, 0.0), C::new(-s, 0.0)],
        vec![C::new(s, 0.0), C::new(c, 0.0)],
    ]
}

fn rz_mat(theta: f64) -> Mat {
    vec![
        vec![C::from_polar(1.0, -theta / 2.0), C::new(0.0, 0.0)],
        vec![C::new(0.0, 0.0), C::from_polar(1.0, theta / 2.0)],
    ]
}

/// Single-qubit gate on qubit `q` (qubit 0 = least significant bit of the
/// amplitude index), expanded to the full register.
fn expand_1q(u: &Mat, q: usize, n: usize) -> Mat {
    kron(&eye(1 << (n - 1 - q)), &kron(u, &eye(1 << q)))
}

/// Dense controlled-NOT as an explicit basis permutation.
fn cnot_mat(control: usize, target: usize, n: usize) -> Mat {
    let dim = 1 << n;
    let mut m = vec![vec![C::new(0.0, 0.0); dim]; dim];
    for col in 0..dim {
        let row = if col & (1 << control) != 0 { col ^ (1 << target) } else { col };
        m[row][col] = C::new(1.0, 0.0);
    }
    m
}

/// Forward prediction computed only from dense matrix products: encoding
/// rotations RZ(acos x^2) then RY(asin x) per qubit, `depth` blocks of RY
/// layers plus entangling CNOTs, a trailing RY on the measured qubit, then
/// the Pauli-Z expectation on that qubit.
pub fn oracle_forward(layout: Layout, depth: usize, n: usize, x: f64, theta: &[f64]) -> f64 {
    assert_eq!(theta.len(), n * depth + 1, "parameter count");
    let dim = 1 << n;
    let mut psi = vec![C::new(0.0, 0.0); dim];
    psi[0] = C::new(1.0, 0.0);

    for q in 0..n {
        psi = matvec(&expand_1q(&rz_mat((x * x).acos()), q, n), &psi);
        psi = matvec(&expand_1q(&ry_mat(x.asin()), q, n), &psi);
    }
    for d in 0..depth {
        for q in 0..n {
            psi = matvec(&expand_1q(&ry_mat(theta[d * n + q]), q, n), &psi);
        }
        if n >= 2 {
            match layout {
                Layout::Chain => {
                    for q in 0..n - 1 {
                        psi = matvec(&cnot_mat(q, q + 1, n), &psi);
                    }
                }
                Layout::Cycle => {
                    for q in 0..n {
                        psi = matvec(&cnot_mat(q, (q + 1) % n, n), &psi);
                    }
                }
            }
        }
    }
    let measured = if n >= 2 { 1 } else { 0 };
    psi = matvec(&expand_1q(&ry_mat(theta[n * depth]), measured, n), &psi);

    (0..dim)
        .map(|i| {
            let sign = if i & (1 << measured) != 0 { -1.0 } else { 1.0 };
            sign * psi[i].norm_sqr()
        })
        .sum()
}

/// Two minima at (-1, 0) and (1, 0) on the unit ring, a Gaussian bump of
/// height 1.2 at (0, 1): the straight line between the minima crests near
/// 1.0023 at the origin while the lower half of the ring stays flat, so a
/// good path search must bow downward.
pub struct DoubleWell;

impl DoubleWell {
    pub const A: [f64; 2] = [-1.0, 0.0];
    pub const B: [f64; 2] = [1.0, 0.0];

    pub fn loss(u: f64, v: f64) -> f64 {
        let ring = u * u + v * v - 1.0;
        ring * ring + 1.2 * (-(u * u + (v - 1.0) * (v - 1.0)) / 0.16).exp()
    }

    pub fn grad(u: f64, v: f64) -> [f64; 2] {
        let ring = u * u + v * v - 1.0;
        let bump = 1.2 * (-(u * u + (v - 1.0) * (v - 1.0)) / 0.16).exp();
        [
            4.0 * u * ring - bump * 2.0 * u / 0.16,
            4.0 * v * ring - bump * 2.0 * (v - 1.0) / 0.16,
        ]
    }
}

impl LossSurface for DoubleWell {
    fn dim(&self) -> usize {
        2
    }

    fn sample_loss(&mut self, theta: &[f64]) -> Result<f64> {
        Ok(Self::loss(theta[0], theta[1]))
    }

    fn sample_loss_grad(&mut self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let g = Self::grad(theta[0], theta[1]);
        Ok((Self::loss(theta[0], theta[1]), g.to_vec()))
    }

    fn mean_loss(&self, theta: &[f64]) -> Result<f64> {
        Ok(Self::loss(theta[0], theta[1]))
    }
}

/// Lowest achievable path maximum of [`DoubleWell::loss`] between `a` and
/// `b`, by Dijkstra over an `n_grid` x `n_grid` lattice on
/// [lo, hi]^2 with 8-neighbor moves and path cost = max node value.
pub fn dijkstra_minimax(n_grid: usize, lo: f64, hi: f64, a: [f64; 2], b: [f64; 2]) -> f64 {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let step = (hi - lo) / (n_grid - 1) as f64;
    let snap = |p: [f64; 2]| -> usize {
        let i = ((p[0] - lo) / step).round() as usize;
        let j = ((p[1] - lo) / step).round() as usize;
        j * n_grid + i
    };
    let value = |idx: usize| -> f64 {
        let (i, j) = (idx % n_grid, idx / n_grid);
        DoubleWell::loss(lo + i as f64 * step, lo + j as f64 * step)
    };

    let start = snap(a);
    let goal = snap(b);
    let mut best = vec![f64::INFINITY; n_grid * n_grid];
    best[start] = value(start).max(value(goal));
    let mut heap = BinaryHeap::new();
    // f64 isn't Ord; order by bits, valid for non-negative finite losses.
    heap.push(Reverse((best[start].to_bits(), start)));

    while let Some(Reverse((cost_bits, idx))) = heap.pop() {
        let cost = f64::from_bits(cost_bits);
        if cost > best[idx] {
            continue;
        }
        if idx == goal {
            return cost;
        }
        let (i, j) = ((idx % n_grid) as isize, (idx / n_grid) as isize);
        for dj in -1..=1isize {
            for di in -1..=1isize {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= n_grid as isize || nj >= n_grid as isize {
                    continue;
                }
                let nidx = nj as usize * n_grid + ni as usize;
                let cand = cost.max(value(nidx));
                if cand < best[nidx] {
                    best[nidx] = cand;
                    heap.push(Reverse((cand.to_bits(), nidx)));
                }
            }
        }
    }
    best[goal]
}
