//! Derivative-free minimization through argmin's Nelder–Mead.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;

struct Wrapped<F: Fn(&[f64]) -> f64>(F);

impl<F: Fn(&[f64]) -> f64> CostFunction for Wrapped<F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> Result<f64, argmin::core::Error> {
        let v = (self.0)(p);
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    }
}

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of size
/// `step`. Infeasible points should return `f64::INFINITY`. Returns the best
/// point and value.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: f64, max_iters: u64, sd_tol: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut p = x0.to_vec();
        p[i] += step;
        simplex.push(p);
    }
    let f0 = f(x0);
    let solver = match NelderMead::new(simplex).with_sd_tolerance(sd_tol) {
        Ok(s) => s,
        Err(_) => return (x0.to_vec(), f0),
    };
    let res = Executor::new(Wrapped(f), solver)
        .configure(|s| s.max_iters(max_iters))
        .run();
    match res {
        Ok(r) => {
            let st = r.state();
            match st.get_best_param() {
                Some(p) => (p.clone(), st.get_best_cost()),
                None => (x0.to_vec(), f0),
            }
        }
        Err(_) => (x0.to_vec(), f0),
    }
}

/// Repeated Nelder–Mead restarts from the previous optimum with a shrinking
/// simplex, which guards against premature collapse.
pub fn nelder_mead_restarts<F>(f: F, x0: &[f64], step: f64, restarts: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = x0.to_vec();
    let mut best = f(&x);
    let mut s = step;
    for _ in 0..restarts {
        let (p, v) = nelder_mead(&f, &x, s, 2000, 1e-15);
        if v <= best {
            x = p;
            best = v;
        }
        s *= 0.3;
    }
    (x, best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let (p, v) = nelder_mead_restarts(
            |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2) + 2.0,
            &[0.0, 0.0],
            0.5,
            4,
        );
        assert!((p[0] - 1.0).abs() < 1e-6 && (p[1] + 0.5).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-11);
    }
}
