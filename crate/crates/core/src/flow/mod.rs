//! The combinatorial Ricci flow in logarithmic coordinates.
//!
//! dx/dt = -K(R_S(x)) is the gradient flow of a convex potential, so the
//! radii stay positive automatically and collapse shows up as coordinates
//! running to minus infinity instead of a finite-time singularity.

mod diagnostics;

pub use diagnostics::{
    ags_bound_check, degeneration_order_check, ratios, AgsReport, AgsSample, ConditionRow,
    OrderCheckReport, RatioCurves,
};

use crate::complex::WeightedTriangulation;
use crate::error::{Error, Result};
use crate::geometry::{curvature, from_coordinates, to_coordinates, Geometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Integrator {
    Rk4Fixed,
    Rk45Adaptive,
}

#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub t_max: f64,
    /// |K|_2 below this terminates as CONVERGED.
    pub curvature_tol: f64,
    /// Output sampling interval.
    pub sample_stride: f64,
    pub integrator: Integrator,
    pub initial_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Coordinate gap x_v - max(x) below this flags degeneration outright.
    pub x_low: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            t_max: 1e4,
            curvature_tol: 1e-9,
            sample_stride: 10.0,
            integrator: Integrator::Rk45Adaptive,
            initial_step: 1e-2,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            x_low: -40.0,
        }
    }
}

impl FlowOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0) {
            return Err(Error::Precondition("t_max must be positive".into()));
        }
        for (name, v) in [
            ("curvature_tol", self.curvature_tol),
            ("sample_stride", self.sample_stride),
            ("initial_step", self.initial_step),
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::Precondition(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Termination {
    /// |K| dropped below the tolerance.
    Converged,
    /// Collapse: a coordinate gap crossed x_low, or the gap was still
    /// widening at the horizon while |K| kept shrinking. Under critical
    /// weights the gaps grow like -log t, so the hard threshold is only
    /// reachable on very long runs and the trend test decides at t_max.
    Degenerating,
    /// Reached t_max with neither signal.
    TMax,
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub k: Vec<f64>,
    pub k_norm: f64,
    /// Sum of coordinates; constant along Euclidean flows (log of the
    /// conserved radius product).
    pub coordinate_sum: f64,
}

impl Sample {
    fn min_gap(&self) -> f64 {
        let x_max = self.x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        self.x
            .iter()
            .map(|&xi| xi - x_max)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub geometry: Geometry,
    pub samples: Vec<Sample>,
    pub termination: Termination,
}

impl FlowTrace {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trace has at least the initial sample")
    }

    /// Samples in the last decade of the trace (t >= t_end / 10), always at
    /// least the final two samples when available.
    pub fn last_decade(&self) -> &[Sample] {
        let t_end = self.last().t;
        let from = self
            .samples
            .iter()
            .position(|s| s.t >= t_end / 10.0)
            .unwrap_or(0)
            .min(self.samples.len().saturating_sub(2));
        &self.samples[from..]
    }
}

struct Derivative<'a> {
    g: Geometry,
    tri: &'a WeightedTriangulation,
}

impl Derivative<'_> {
    fn eval(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let r = from_coordinates(self.g, x)?;
        let k = curvature(self.g, self.tri, &r)?;
        let dx: Vec<f64> = k.iter().map(|&kv| -kv).collect();
        Ok((dx, r, k))
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const STEP_FLOOR: f64 = 1e-12;

enum Attempt {
    Accepted { x: Vec<f64>, error: f64 },
    Rejected,
    OutOfDomain,
}

fn dopri5_step(
    deriv: &Derivative<'_>,
    x: &[f64],
    f0: &[f64],
    h: f64,
    rel: f64,
    abs: f64,
) -> Result<Attempt> {
    let n = x.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    k.push(f0.to_vec());
    for stage in 0..6 {
        let mut xs = x.to_vec();
        for (j, kj) in k.iter().enumerate() {
            let a = A[stage][j];
            if a != 0.0 {
                for i in 0..n {
                    xs[i] += h * a * kj[i];
                }
            }
        }
        match deriv.eval(&xs) {
            Ok((dx, _, _)) => k.push(dx),
            Err(Error::Domain(_)) => return Ok(Attempt::OutOfDomain),
            Err(e) => return Err(e),
        }
    }
    let mut x5 = x.to_vec();
    let mut err = vec![0.0; n];
    for (j, kj) in k.iter().enumerate() {
        for i in 0..n {
            x5[i] += h * B5[j] * kj[i];
            err[i] += h * (B5[j] - B4[j]) * kj[i];
        }
    }
    let mut scaled = 0.0;
    for i in 0..n {
        let scale = abs + rel * x[i].abs().max(x5[i].abs());
        scaled += (err[i] / scale).powi(2);
    }
    let error = (scaled / n as f64).sqrt();
    if error > 1.0 {
        Ok(Attempt::Rejected)
    } else {
        Ok(Attempt::Accepted { x: x5, error })
    }
}

fn rk4_step(deriv: &Derivative<'_>, x: &[f64], f0: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = x.len();
    let add =
        |x: &[f64], k: &[f64], c: f64| -> Vec<f64> { (0..n).map(|i| x[i] + c * k[i]).collect() };
    let k1 = f0.to_vec();
    let (k2, _, _) = deriv.eval(&add(x, &k1, h / 2.0))?;
    let (k3, _, _) = deriv.eval(&add(x, &k2, h / 2.0))?;
    let (k4, _, _) = deriv.eval(&add(x, &k3, h))?;
    Ok((0..n)
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrate the flow from the metric `r0`. Samples are recorded at t = 0,
/// at every multiple of the sample stride, and at the termination time.
pub fn integrate(
    g: Geometry,
    tri: &WeightedTriangulation,
    r0: &[f64],
    opts: &FlowOptions,
) -> Result<FlowTrace> {
    opts.validate()?;
    if g != Geometry::for_triangulation(tri) {
        return Err(Error::Precondition(
            "geometry does not match the Euler characteristic".into(),
        ));
    }
    let deriv = Derivative { g, tri };
    let mut x = to_coordinates(g, r0)?;
    let mut t = 0.0;
    let mut h = opts.initial_step;

    let mut samples: Vec<Sample> = Vec::new();
    let record = |samples: &mut Vec<Sample>, t: f64, x: &[f64], r: &[f64], k: &[f64]| {
        samples.push(Sample {
            t,
            x: x.to_vec(),
            r: r.to_vec(),
            k: k.to_vec(),
            k_norm: norm2(k),
            coordinate_sum: x.iter().sum(),
        });
    };

    let (mut f0, r_init, k_init) = deriv.eval(&x)?;
    record(&mut samples, 0.0, &x, &r_init, &k_init);
    let mut next_sample = opts.sample_stride;

    if norm2(&k_init) < opts.curvature_tol {
        return Ok(FlowTrace {
            geometry: g,
            samples,
            termination: Termination::Converged,
        });
    }

    let mut termination = None;
    while termination.is_none() {
        let h_clipped = h.min(opts.t_max - t).min(next_sample - t).max(STEP_FLOOR);
        let x_new = match opts.integrator {
            Integrator::Rk45Adaptive => {
                match dopri5_step(&deriv, &x, &f0, h_clipped, opts.rel_tol, opts.abs_tol)? {
                    Attempt::OutOfDomain | Attempt::Rejected => {
                        h = h_clipped / 2.0;
                        if h < STEP_FLOOR {
                            return Err(Error::Stiffness(format!(
                                "step collapsed below {STEP_FLOOR:e} at t = {t}"
                            )));
                        }
                        continue;
                    }
                    Attempt::Accepted { x, error } => {
                        let grown = h_clipped * (0.9 * error.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
                        // A step clipped to hit an output time says nothing
                        // about the nominal step; only unclipped steps may
                        // shrink it.
                        h = if h_clipped < h { h.max(grown) } else { grown };
                        x
                    }
                }
            }
            Integrator::Rk4Fixed => rk4_step(&deriv, &x, &f0, h_clipped)?,
        };

        x = x_new;
        t += h_clipped;
        let (f_new, r, k) = deriv.eval(&x)?;
        f0 = f_new;
        let k_norm = norm2(&k);

        let on_sample = t >= next_sample - 1e-12 * (1.0 + t);
        if on_sample {
            record(&mut samples, t, &x, &r, &k);
            next_sample += opts.sample_stride;
        }

        let x_max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let collapsed = x.iter().any(|&xi| xi - x_max < opts.x_low);
        if k_norm < opts.curvature_tol {
            termination = Some(Termination::Converged);
        } else if collapsed || t >= opts.t_max {
            // Stopping either way; the decay trend decides the label below.
            termination = Some(Termination::TMax);
        }
        if termination.is_some() && !on_sample {
            record(&mut samples, t, &x, &r, &k);
        }
    }

    let mut termination = termination.unwrap();
    if termination == Termination::TMax {
        if let Some(t) = horizon_trend(&samples) {
            termination = t;
        }
    }

    Ok(FlowTrace {
        geometry: g,
        samples,
        termination,
    })
}

/// Classify a run that reached the horizon: if over the last decade the
/// smallest coordinate gap kept widening while |K| kept shrinking toward
/// zero, the flow is degenerating.
fn horizon_trend(samples: &[Sample]) -> Option<Termination> {
    let last = samples.last()?;
    let t_end = last.t;
    let earlier = samples.iter().find(|s| s.t >= t_end / 10.0)?;
    if earlier.t >= last.t {
        return None;
    }
    let gap_widening = last.min_gap() < earlier.min_gap() - 0.5;
    let k_shrinking = last.k_norm < 0.9 * earlier.k_norm;
    let k_small = last.k_norm < 1e-2;
    (gap_widening && k_shrinking && k_small).then_some(Termination::Degenerating)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fixed_point_converges_immediately() {
        let t = fixtures::load(fixtures::MINIMAL_TORUS);
        let trace = integrate(Geometry::Euclidean, &t, &[1.0], &FlowOptions::default()).unwrap();
        assert_eq!(trace.termination, Termination::Converged);
        assert_eq!(trace.samples.len(), 1);
        assert_eq!(trace.last().t, 0.0);
    }

    #[test]
    fn subcritical_flow_converges() {
        let t = fixtures::load(fixtures::TORUS_SUBCRITICAL);
        let trace = integrate(
            Geometry::Euclidean,
            &t,
            &[1.3, 0.7, 1.1],
            &FlowOptions {
                sample_stride: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(trace.termination, Termination::Converged);
        assert!(trace.last().k_norm < 1e-9);
    }

    #[test]
    fn remark_flow_degenerates_with_vanishing_curvature() {
        let t = fixtures::load(fixtures::REMARK_TORUS);
        let v1 = t.vertex_id_index("v1").unwrap();
        let v2 = t.vertex_id_index("v2").unwrap();
        let trace =
            integrate(Geometry::Euclidean, &t, &[1.0, 1.0], &FlowOptions::default()).unwrap();
        assert_eq!(trace.termination, Termination::Degenerating);
        let last = trace.last();
        // Collapse of v1 relative to v2 at roughly 1/t: gap ~ -log t.
        assert!(last.x[v1] - last.x[v2] < -9.0);
        assert!(last.k_norm < 1e-3);
        for pair in trace.samples.windows(2) {
            assert!(pair[1].k_norm <= pair[0].k_norm + 1e-7);
        }
    }

    #[test]
    fn supercritical_flow_reports_t_max() {
        let t = fixtures::load(fixtures::REMARK_SUPERCRITICAL);
        let trace = integrate(
            Geometry::Euclidean,
            &t,
            &[1.0, 1.0],
            &FlowOptions {
                t_max: 200.0,
                ..Default::default()
            },
        )
        .unwrap();
        // |K| stays bounded away from zero: not a degeneration.
        assert_eq!(trace.termination, Termination::TMax);
        assert!(trace.last().k_norm > 1e-2);
    }

    #[test]
    fn euclidean_flow_conserves_the_radius_product() {
        let t = fixtures::load(fixtures::TORUS_PAIR_COLLAPSE);
        let trace = integrate(
            Geometry::Euclidean,
            &t,
            &[2.0, 0.5, 1.0],
            &FlowOptions::default(),
        )
        .unwrap();
        let s0 = trace.samples[0].coordinate_sum;
        for s in &trace.samples {
            assert!(
                (s.coordinate_sum - s0).abs() < 1e-8 * (1.0 + s.t),
                "t = {}: drift {}",
                s.t,
                (s.coordinate_sum - s0).abs()
            );
        }
    }

    #[test]
    fn hyperbolic_critical_flow_collapses_w() {
        let t = fixtures::load(fixtures::GENUS2_CRITICAL);
        let w = t.vertex_id_index("w").unwrap();
        let v = t.vertex_id_index("v").unwrap();
        let trace =
            integrate(Geometry::Hyperbolic, &t, &[1.0, 1.0], &FlowOptions::default()).unwrap();
        assert_eq!(trace.termination, Termination::Degenerating);
        let last = trace.last();
        assert!(last.r[w] < 1e-3, "r_w = {}", last.r[w]);
        assert!(last.r[v] > 0.1, "r_v = {}", last.r[v]);
    }

    #[test]
    fn descent_inequality_holds_between_samples() {
        let t = fixtures::load(fixtures::TORUS_SUBCRITICAL);
        let trace = integrate(
            Geometry::Euclidean,
            &t,
            &[3.0, 0.4, 1.0],
            &FlowOptions {
                sample_stride: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        for pair in trace.samples.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let line_integral: f64 = (0..a.x.len())
                .map(|i| 0.5 * (a.k[i] + b.k[i]) * (b.x[i] - a.x[i]))
                .sum();
            assert!(line_integral <= 1e-9, "psi ascent {line_integral}");
        }
    }

    #[test]
    fn rk4_fixed_agrees_with_adaptive() {
        let t = fixtures::load(fixtures::TORUS_SUBCRITICAL);
        let opts_fixed = FlowOptions {
            integrator: Integrator::Rk4Fixed,
            initial_step: 1e-3,
            t_max: 2.0,
            sample_stride: 2.0,
            curvature_tol: 1e-14,
            ..Default::default()
        };
        let opts_adaptive = FlowOptions {
            t_max: 2.0,
            sample_stride: 2.0,
            curvature_tol: 1e-14,
            ..FlowOptions::default()
        };
        let a = integrate(Geometry::Euclidean, &t, &[1.5, 0.8, 1.0], &opts_fixed).unwrap();
        let b = integrate(Geometry::Euclidean, &t, &[1.5, 0.8, 1.0], &opts_adaptive).unwrap();
        let (xa, xb) = (&a.last().x, &b.last().x);
        for i in 0..xa.len() {
            assert!((xa[i] - xb[i]).abs() < 1e-6);
        }
    }
}
