//! Central finite differences for gradient verification.
//!
//! The checker only re-evaluates the forward computation; it never touches
//! the backward pass, so it stays an independent oracle for it.

use crate::scalar::Scalar;
use ndarray::Array2;

/// Coordinate of one tensor entry inside a parameter list.
#[derive(Debug, Clone, Copy)]
pub struct Coord {
    pub tensor: usize,
    pub row: usize,
    pub col: usize,
}

/// Central finite difference of `f` at `params` along `coord`.
pub fn central_diff<F, G>(f: &mut G, params: &[Array2<F>], coord: Coord, h: f64) -> f64
where
    F: Scalar,
    G: FnMut(&[Array2<F>]) -> F,
{
    let mut plus = params.to_vec();
    plus[coord.tensor][[coord.row, coord.col]] += F::of(h);
    let mut minus = params.to_vec();
    minus[coord.tensor][[coord.row, coord.col]] -= F::of(h);
    (f(&plus).widen() - f(&minus).widen()) / (2.0 * h)
}

/// Relative error between an autodiff gradient entry and its finite-difference
/// estimate. The denominator is floored at 1e-5 so near-zero gradients are
/// compared absolutely instead of against finite-difference rounding noise.
pub fn relative_error(autodiff: f64, finite_diff: f64) -> f64 {
    let denom = autodiff.abs().max(finite_diff.abs()).max(1e-5);
    (autodiff - finite_diff).abs() / denom
}

/// Deterministically sample up to `max_per_tensor` coordinates from each
/// tensor, covering small tensors exhaustively.
pub fn sample_coords<F: Scalar>(
    params: &[Array2<F>],
    max_per_tensor: usize,
    seed: u64,
) -> Vec<Coord> {
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let mut coords = Vec::new();
    for (t, p) in params.iter().enumerate() {
        let (r, c) = p.dim();
        let total = r * c;
        if total <= max_per_tensor {
            for row in 0..r {
                for col in 0..c {
                    coords.push(Coord { tensor: t, row, col });
                }
            }
        } else {
            for _ in 0..max_per_tensor {
                let k = (next() % total as u64) as usize;
                coords.push(Coord {
                    tensor: t,
                    row: k / c,
                    col: k % c,
                });
            }
        }
    }
    coords
}
