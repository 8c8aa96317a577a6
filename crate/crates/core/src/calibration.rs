//! Calibrated reference flows and the stability functionals.
//!
//! Three exact flows are provided: a stationary chord, a shrinking half-disk
//! attached to the bottom wall, and a translating graph in a strip. Each is
//! equipped with explicit fields `(xi, B, theta)` - an extended unit normal,
//! an extended velocity, and a signed weight - satisfying the boundary, sign,
//! coercivity, and approximate transport conditions of a boundary adapted
//! gradient flow calibration. The conditions are re-verified numerically by
//! [`verify_calibration`] with the constants measured at construction time.
//!
//! Against such a calibration, the distance of a simulated evolution is
//! measured by the relative entropy `c0 int (1 - nu_A . xi)` over the
//! extracted interface and the bulk error `int_{A delta Ref} |theta|`, and
//! the Gronwall stability inequalities of the two error functionals are
//! checked on the resulting time series.

use crate::error::Error;
use crate::grid::Grid;
use crate::interface::{Curve, InterfaceCurve};
use crate::potentials::{psi, C0};
use crate::solver::PhaseField;
use crate::Result;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

/// C2 bump: `(1 - s^2)^3` on `|s| < 1`, zero outside. Two continuous
/// derivatives keep the finite-difference condition scans clean across the
/// cutoff edge.
#[inline]
fn bump(s: f64) -> f64 {
    let a = 1.0 - s * s;
    if a > 0.0 {
        a * a * a
    } else {
        0.0
    }
}

/// C2 ramp: quintic smoothstep `0 -> 1` on `[0, 1]`.
#[inline]
fn ramp(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

/// Exact reference evolution with closed-form geometry.
#[derive(Debug, Clone, Copy)]
pub enum ReferenceFlow {
    /// Vertical stationary interface `x = x0`, `A = {x < x0}`, right angle.
    StationaryChord { lx: f64, ly: f64, x0: f64, horizon: f64 },
    /// `A = {|x - (cx, 0)| < R(t)}` with `R(t) = sqrt(r0^2 - 2t)`.
    ShrinkingHalfDisk { lx: f64, ly: f64, cx: f64, r0: f64, horizon: f64 },
    /// Graph `y = Y(x, t)` translating upward with speed `a = (pi - 2 alpha)/w`
    /// in the strip `w = lx`; `A = {y > Y}` meets the side walls at the wall
    /// angle `alpha` (angle `pi - alpha` inside `A`).
    StripTranslator {
        lx: f64,
        ly: f64,
        alpha: f64,
        speed: f64,
        y0: f64,
        horizon: f64,
    },
}

impl ReferenceFlow {
    pub fn stationary_chord(lx: f64, ly: f64, x0: f64, eps: f64) -> Result<Self> {
        if !(x0 > 4.0 * eps && x0 < lx - 4.0 * eps) {
            return Err(Error::Calibration(format!(
                "chord position {x0} too close to the side walls"
            )));
        }
        Ok(ReferenceFlow::StationaryChord {
            lx,
            ly,
            x0,
            horizon: f64::INFINITY,
        })
    }

    pub fn shrinking_half_disk(lx: f64, ly: f64, cx: f64, r0: f64, eps: f64) -> Result<Self> {
        let clearance = (cx - r0).min(lx - cx - r0).min(ly - r0);
        if clearance < 6.0 * eps {
            return Err(Error::Calibration(format!(
                "half-disk (cx={cx}, r0={r0}) too close to the far walls"
            )));
        }
        // R(t) >= max(4 eps, r0/4) throughout the horizon
        let r_min = (4.0 * eps).max(0.25 * r0);
        let horizon = 0.5 * (r0 * r0 - r_min * r_min);
        if horizon <= 0.0 {
            return Err(Error::Calibration(format!(
                "half-disk radius {r0} below the resolvable scale {r_min}"
            )));
        }
        Ok(ReferenceFlow::ShrinkingHalfDisk {
            lx,
            ly,
            cx,
            r0,
            horizon,
        })
    }

    pub fn strip_translator(lx: f64, ly: f64, alpha: f64, y0: f64, eps: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= FRAC_PI_2 + 1e-14) {
            return Err(Error::Calibration(format!(
                "translator wall angle must lie in (0, pi/2], got {alpha}"
            )));
        }
        let speed = (PI - 2.0 * alpha) / lx;
        // peak of the profile above its center line
        let peak = if speed > 0.0 {
            -(alpha.sin().ln()) / speed
        } else {
            0.0
        };
        let margin = 6.0 * eps;
        if y0 - margin <= 0.0 {
            return Err(Error::Calibration(format!(
                "translator start height {y0} too close to the bottom wall"
            )));
        }
        let head0 = y0 + peak;
        let room = ly - margin - head0;
        if room <= 0.0 {
            return Err(Error::Calibration(
                "translator profile does not fit below the top wall".into(),
            ));
        }
        let horizon = if speed > 0.0 { room / speed } else { f64::INFINITY };
        Ok(ReferenceFlow::StripTranslator {
            lx,
            ly,
            alpha,
            speed,
            y0,
            horizon,
        })
    }

    pub fn horizon(&self) -> f64 {
        match *self {
            ReferenceFlow::StationaryChord { horizon, .. }
            | ReferenceFlow::ShrinkingHalfDisk { horizon, .. }
            | ReferenceFlow::StripTranslator { horizon, .. } => horizon,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match *self {
            ReferenceFlow::StationaryChord { lx, ly, .. }
            | ReferenceFlow::ShrinkingHalfDisk { lx, ly, .. }
            | ReferenceFlow::StripTranslator { lx, ly, .. } => (lx, ly),
        }
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if t < 0.0 || t > self.horizon() {
            return Err(Error::Calibration(format!(
                "time {t} outside the validity horizon [0, {}]",
                self.horizon()
            )));
        }
        Ok(())
    }

    /// Half-disk radius at time `t`.
    pub fn radius(&self, t: f64) -> Option<f64> {
        match *self {
            ReferenceFlow::ShrinkingHalfDisk { r0, .. } => Some((r0 * r0 - 2.0 * t).sqrt()),
            _ => None,
        }
    }

    /// Translation speed of the translator (zero for the other flows).
    pub fn translation_speed(&self) -> f64 {
        match *self {
            ReferenceFlow::StripTranslator { speed, .. } => speed,
            _ => 0.0,
        }
    }

    /// Graph height of the translator.
    pub fn graph_height(&self, x: f64, t: f64) -> Option<f64> {
        match *self {
            ReferenceFlow::StripTranslator {
                lx,
                alpha: _,
                speed,
                y0,
                ..
            } => {
                let xt = x - 0.5 * lx;
                if speed == 0.0 {
                    Some(y0)
                } else {
                    Some(y0 + speed * t - (speed * xt).cos().ln() / speed)
                }
            }
            _ => None,
        }
    }

    /// Level coordinate: negative inside the reference phase, comparable to
    /// the signed distance near the interface.
    pub fn level_coord(&self, x: f64, y: f64, t: f64) -> f64 {
        match *self {
            ReferenceFlow::StationaryChord { x0, .. } => x - x0,
            ReferenceFlow::ShrinkingHalfDisk { cx, r0, .. } => {
                let r = ((x - cx).powi(2) + y * y).sqrt();
                r - (r0 * r0 - 2.0 * t).sqrt()
            }
            ReferenceFlow::StripTranslator { lx, speed, .. } => {
                let yy = self.graph_height(x, t).unwrap();
                let xt = x - 0.5 * lx;
                (yy - y) * (speed * xt).cos()
            }
        }
    }

    pub fn inside(&self, x: f64, y: f64, t: f64) -> bool {
        self.level_coord(x, y, t) < 0.0
    }

    /// Signed distance for well-prepared initial data: positive inside.
    pub fn signed_distance(&self, x: f64, y: f64, t: f64) -> f64 {
        match *self {
            // level coordinates of the chord and half-disk are exact distances
            ReferenceFlow::StationaryChord { .. } | ReferenceFlow::ShrinkingHalfDisk { .. } => {
                -self.level_coord(x, y, t)
            }
            ReferenceFlow::StripTranslator { .. } => {
                // exact distance to the graph by golden-section refinement
                let d = self.distance_to_interface(x, y, t);
                if self.inside(x, y, t) {
                    d
                } else {
                    -d
                }
            }
        }
    }

    /// Unsigned distance to the closure of the interior interface.
    pub fn distance_to_interface(&self, x: f64, y: f64, t: f64) -> f64 {
        match *self {
            ReferenceFlow::StationaryChord { x0, .. } => (x - x0).abs(),
            ReferenceFlow::ShrinkingHalfDisk { .. } => self.level_coord(x, y, t).abs(),
            ReferenceFlow::StripTranslator { lx, .. } => {
                let f = |xc: f64| {
                    let yc = self.graph_height(xc, t).unwrap();
                    ((x - xc).powi(2) + (y - yc).powi(2)).sqrt()
                };
                // coarse scan then golden-section refinement
                let n = 64;
                let mut best_k: usize = 0;
                let mut best = f64::INFINITY;
                for k in 0..=n {
                    let xc = lx * k as f64 / n as f64;
                    let d = f(xc);
                    if d < best {
                        best = d;
                        best_k = k;
                    }
                }
                let mut a = lx * (best_k.saturating_sub(1)) as f64 / n as f64;
                let mut b = lx * ((best_k + 1).min(n)) as f64 / n as f64;
                let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
                let mut x1 = b - phi * (b - a);
                let mut x2 = a + phi * (b - a);
                let (mut f1, mut f2) = (f(x1), f(x2));
                for _ in 0..40 {
                    if f1 < f2 {
                        b = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = b - phi * (b - a);
                        f1 = f(x1);
                    } else {
                        a = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = a + phi * (b - a);
                        f2 = f(x2);
                    }
                }
                f(0.5 * (a + b)).min(best)
            }
        }
    }

    /// Phase area `|A(t)|`.
    pub fn area(&self, t: f64) -> f64 {
        match *self {
            ReferenceFlow::StationaryChord { ly, x0, .. } => x0 * ly,
            ReferenceFlow::ShrinkingHalfDisk { r0, .. } => {
                let r2 = r0 * r0 - 2.0 * t;
                0.5 * PI * r2
            }
            ReferenceFlow::StripTranslator { lx, ly, .. } => {
                // area above the graph by Simpson quadrature
                let n = 256;
                let mut acc = 0.0;
                for k in 0..n {
                    let xa = lx * k as f64 / n as f64;
                    let xb = lx * (k + 1) as f64 / n as f64;
                    let xm = 0.5 * (xa + xb);
                    let f = |x: f64| ly - self.graph_height(x, t).unwrap();
                    acc += (xb - xa) / 6.0 * (f(xa) + 4.0 * f(xm) + f(xb));
                }
                acc
            }
        }
    }

    /// Reference interface polyline with inner normals of `A`, ordered with
    /// `A` on the left.
    pub fn reference_curve(&self, t: f64, n: usize) -> Curve {
        let mut vertices = Vec::with_capacity(n + 1);
        let mut normals = Vec::with_capacity(n + 1);
        match *self {
            ReferenceFlow::StationaryChord { ly, x0, .. } => {
                // A = {x < x0}: travel downward, left normal (-1, 0)
                for k in 0..=n {
                    let y = ly * (1.0 - k as f64 / n as f64);
                    vertices.push([x0, y]);
                    normals.push([-1.0, 0.0]);
                }
            }
            ReferenceFlow::ShrinkingHalfDisk { cx, r0, .. } => {
                let r = (r0 * r0 - 2.0 * t).sqrt();
                // A = disk: upper semicircle from phi = 0 to pi
                for k in 0..=n {
                    let phi = PI * k as f64 / n as f64;
                    vertices.push([cx + r * phi.cos(), r * phi.sin()]);
                    normals.push([-phi.cos(), -phi.sin()]);
                }
            }
            ReferenceFlow::StripTranslator { lx, speed, .. } => {
                // A = above: travel with increasing x, left normal points up
                for k in 0..=n {
                    let x = lx * k as f64 / n as f64;
                    let y = self.graph_height(x, t).unwrap();
                    vertices.push([x, y]);
                    let xt = x - 0.5 * lx;
                    let (s, c) = (speed * xt).sin_cos();
                    normals.push([-s, c]);
                }
            }
        }
        let m = vertices.len();
        let mut weights = vec![0.0; m];
        for k in 0..m - 1 {
            let d = ((vertices[k + 1][0] - vertices[k][0]).powi(2)
                + (vertices[k + 1][1] - vertices[k][1]).powi(2))
            .sqrt();
            weights[k] += 0.5 * d;
            weights[k + 1] += 0.5 * d;
        }
        Curve {
            vertices,
            closed: false,
            normals,
            weights,
        }
    }
}

/// Calibration fields `(xi, B, theta)` for a reference flow, with the cutoff
/// scales and the constants measured at construction.
#[derive(Debug, Clone)]
pub struct CalibrationFields {
    pub flow: ReferenceFlow,
    pub l_xi: f64,
    pub l_theta: f64,
    pub l_wall: f64,
    /// Coercivity constant `c` in `|xi| <= 1 - c min(1, dist^2)`.
    pub coercivity_c: f64,
    /// Measured constants per transport/compatibility condition.
    pub constants: BTreeMap<String, f64>,
    /// Debug scaling of `xi` (negative control; 1.0 in normal use).
    pub xi_scale: f64,
}

impl CalibrationFields {
    pub fn xi(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let s = self.xi_scale;
        match self.flow {
            ReferenceFlow::StationaryChord { .. } => {
                let level = self.flow.level_coord(x, y, t);
                let g = bump(level / self.l_xi);
                [-g * s, 0.0]
            }
            ReferenceFlow::ShrinkingHalfDisk { cx, .. } => {
                let level = self.flow.level_coord(x, y, t);
                let g = bump(level / self.l_xi);
                if g == 0.0 {
                    return [0.0, 0.0];
                }
                let r = ((x - cx).powi(2) + y * y).sqrt();
                let er = if r > 1e-12 {
                    [(x - cx) / r, y / r]
                } else {
                    [1.0, 0.0]
                };
                [-er[0] * g * s, -er[1] * g * s]
            }
            ReferenceFlow::StripTranslator { lx, alpha, speed, .. } => {
                let level = self.flow.level_coord(x, y, t);
                let g = bump(level / self.l_xi);
                let xt = x - 0.5 * lx;
                let (sn, cs) = (speed * xt).sin_cos();
                // blended with a far field carrying the same wall-normal
                // component cos(alpha), so the angle condition holds exactly
                // on the contact walls for every y
                let far = [alpha.cos() * (1.0 - 2.0 * x / lx), 0.0];
                [
                    (g * (-sn) + (1.0 - g) * far[0]) * s,
                    (g * cs + (1.0 - g) * far[1]) * s,
                ]
            }
        }
    }

    pub fn b_field(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        match self.flow {
            ReferenceFlow::StationaryChord { .. } => [0.0, 0.0],
            ReferenceFlow::ShrinkingHalfDisk { lx, ly, cx, r0, .. } => {
                let r_t = (r0 * r0 - 2.0 * t).sqrt();
                let r = ((x - cx).powi(2) + y * y).sqrt();
                let delta = 0.25 * r_t;
                let q = ramp(r / delta);
                if q == 0.0 {
                    return [0.0, 0.0];
                }
                let er = [(x - cx) / r, y / r];
                let chi = ramp(x / self.l_wall)
                    * ramp((lx - x) / self.l_wall)
                    * ramp((ly - y) / self.l_wall);
                let f = -q / r_t * chi;
                [er[0] * f, er[1] * f]
            }
            ReferenceFlow::StripTranslator { ly, speed, .. } => {
                let chi = ramp(y / self.l_wall) * ramp((ly - y) / self.l_wall);
                [0.0, speed * chi]
            }
        }
    }

    pub fn theta(&self, x: f64, y: f64, t: f64) -> f64 {
        (self.flow.level_coord(x, y, t) / self.l_theta).clamp(-1.0, 1.0)
    }
}

/// Builds the calibration for a flow on a grid, choosing the cutoff scales
/// from the flow's clearances and measuring the condition constants on an
/// internal scan. Fails when the grid cannot resolve the cutoffs
/// (`l < 4h`).
pub fn build_calibration(flow: &ReferenceFlow, grid: &Grid) -> Result<CalibrationFields> {
    let (lx, ly) = flow.domain();
    // The field scales come from the flow's clearances; the calibration's
    // own copy of the flow gets its horizon capped so the cutoff bands stay
    // inside the container for every verified time.
    let mut flow_cal = *flow;
    let (l_xi, l_wall) = match &mut flow_cal {
        ReferenceFlow::StationaryChord { x0, .. } => {
            let l = 0.5 * x0.min(lx - *x0);
            (l, 0.1 * lx.min(ly))
        }
        ReferenceFlow::ShrinkingHalfDisk { cx, r0, horizon, .. } => {
            // keep R(t) >= r0/2 within the calibration horizon
            *horizon = horizon.min(3.0 / 8.0 * *r0 * *r0);
            let r_end = 0.5 * *r0;
            let clearance = (*cx - *r0).min(lx - *cx - *r0).min(ly - *r0);
            let l = (0.5 * r_end).min(0.5 * clearance);
            (l, (0.9 * (clearance - l)).max(1e-6))
        }
        ReferenceFlow::StripTranslator {
            ly,
            alpha,
            speed,
            y0,
            horizon,
            ..
        } => {
            let l = 0.5 * *y0 * alpha.sin();
            let band = l / alpha.sin();
            if *speed > 0.0 {
                let peak = -(alpha.sin().ln()) / *speed;
                let cap = (*ly - 1.05 * band - peak - *y0) / *speed;
                if cap <= 0.0 {
                    return Err(Error::Calibration(
                        "translator band does not fit below the top wall".into(),
                    ));
                }
                *horizon = horizon.min(cap);
            }
            (l, (0.9 * (*y0 - band)).max(1e-6))
        }
    };
    let l_theta = 0.5 * l_xi;
    if l_theta < 4.0 * grid.h {
        return Err(Error::Calibration(format!(
            "grid too coarse to resolve the cutoff scales: l_theta = {l_theta:.4} < 4h = {:.4}",
            4.0 * grid.h
        )));
    }
    let mut fields = CalibrationFields {
        flow: flow_cal,
        l_xi,
        l_theta,
        l_wall,
        coercivity_c: 0.0,
        constants: BTreeMap::new(),
        xi_scale: 1.0,
    };
    measure_constants(&mut fields);
    Ok(fields)
}

fn scan_times(flow: &ReferenceFlow) -> Vec<f64> {
    let t_max = if flow.horizon().is_finite() {
        flow.horizon()
    } else {
        1.0
    };
    [0.15, 0.5, 0.85].iter().map(|f| f * t_max).collect()
}

/// Point evaluations and finite-difference derivatives of the fields,
/// gathered once per sample.
struct FieldSample {
    xi: [f64; 2],
    theta: f64,
    dist: f64,
    /// `d_t xi + (B.grad) xi + (grad B)^T xi`
    xi_transport: [f64; 2],
    /// `xi . (d_t xi + (B.grad) xi)`
    xi_len_transport: f64,
    /// `d_t theta + B . grad theta`, `None` within the clamp-kink margin
    theta_transport: Option<f64>,
    /// `B . xi + div xi`
    motion: f64,
    /// Magnitude of the individual terms entering each cancellation; the
    /// verifier allows finite-difference noise proportional to these.
    scale_xi_transport: f64,
    scale_motion: f64,
    scale_theta: f64,
}

fn sample_fields(f: &CalibrationFields, x: f64, y: f64, t: f64, d_fd: f64) -> FieldSample {
    let flow = &f.flow;
    let xi = f.xi(x, y, t);
    let b = f.b_field(x, y, t);
    let theta = f.theta(x, y, t);
    let dist = flow.distance_to_interface(x, y, t);

    // fourth-order central differences of the closed forms
    let dt = d_fd;
    let t0 = (t - 2.0 * dt).max(0.0);
    let tshift = t - t0 - 2.0 * dt; // zero unless clamped at t = 0
    let _ = tshift;
    let d4 = |fm2: f64, fm1: f64, fp1: f64, fp2: f64| (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * d_fd);

    let xi_c = |xx: f64, yy: f64, tt: f64, k: usize| f.xi(xx, yy, tt)[k];
    let b_c = |xx: f64, yy: f64, tt: f64, k: usize| f.b_field(xx, yy, tt)[k];

    let mut dxi_dt = [0.0; 2];
    let mut grad_xi = [[0.0; 2]; 2]; // grad_xi[i][j] = d xi_i / d x_j
    let mut grad_b = [[0.0; 2]; 2];
    for i in 0..2 {
        dxi_dt[i] = d4(
            xi_c(x, y, t - 2.0 * dt, i),
            xi_c(x, y, t - dt, i),
            xi_c(x, y, t + dt, i),
            xi_c(x, y, t + 2.0 * dt, i),
        );
        grad_xi[i][0] = d4(
            xi_c(x - 2.0 * d_fd, y, t, i),
            xi_c(x - d_fd, y, t, i),
            xi_c(x + d_fd, y, t, i),
            xi_c(x + 2.0 * d_fd, y, t, i),
        );
        grad_xi[i][1] = d4(
            xi_c(x, y - 2.0 * d_fd, t, i),
            xi_c(x, y - d_fd, t, i),
            xi_c(x, y + d_fd, t, i),
            xi_c(x, y + 2.0 * d_fd, t, i),
        );
        grad_b[i][0] = d4(
            b_c(x - 2.0 * d_fd, y, t, i),
            b_c(x - d_fd, y, t, i),
            b_c(x + d_fd, y, t, i),
            b_c(x + 2.0 * d_fd, y, t, i),
        );
        grad_b[i][1] = d4(
            b_c(x, y - 2.0 * d_fd, t, i),
            b_c(x, y - dt, t, i),
            b_c(x, y + d_fd, t, i),
            b_c(x, y + 2.0 * d_fd, t, i),
        );
    }
    let mut xi_transport = [0.0; 2];
    let mut scale_xi_transport = 0.0;
    for i in 0..2 {
        let advect = b[0] * grad_xi[i][0] + b[1] * grad_xi[i][1];
        let gbt = grad_b[0][i] * xi[0] + grad_b[1][i] * xi[1];
        xi_transport[i] = dxi_dt[i] + advect + gbt;
        scale_xi_transport += dxi_dt[i].abs() + advect.abs() + gbt.abs();
    }
    let xi_len_transport = xi[0] * (dxi_dt[0] + b[0] * grad_xi[0][0] + b[1] * grad_xi[0][1])
        + xi[1] * (dxi_dt[1] + b[0] * grad_xi[1][0] + b[1] * grad_xi[1][1]);

    // theta transport: analytic advection of the level coordinate, skipped
    // in a margin around the clamp kink where theta is not differentiable
    let level = flow.level_coord(x, y, t);
    let kink_margin = 8.0 * d_fd * (1.0 + f.flow.translation_speed().abs() + 2.0);
    let (theta_transport, scale_theta) = if (level.abs() - f.l_theta).abs() <= kink_margin {
        (None, 0.0)
    } else if level.abs() >= f.l_theta {
        (Some(0.0), 0.0)
    } else {
        let lvl = |xx: f64, yy: f64, tt: f64| flow.level_coord(xx, yy, tt);
        let dl_dt = d4(
            lvl(x, y, t - 2.0 * dt),
            lvl(x, y, t - dt),
            lvl(x, y, t + dt),
            lvl(x, y, t + 2.0 * dt),
        );
        let dl_dx = d4(
            lvl(x - 2.0 * d_fd, y, t),
            lvl(x - d_fd, y, t),
            lvl(x + d_fd, y, t),
            lvl(x + 2.0 * d_fd, y, t),
        );
        let dl_dy = d4(
            lvl(x, y - 2.0 * d_fd, t),
            lvl(x, y - d_fd, t),
            lvl(x, y + d_fd, t),
            lvl(x, y + 2.0 * d_fd, t),
        );
        let adv = b[0] * dl_dx + b[1] * dl_dy;
        (
            Some((dl_dt + adv) / f.l_theta),
            (dl_dt.abs() + adv.abs()) / f.l_theta,
        )
    };

    let div_xi = grad_xi[0][0] + grad_xi[1][1];
    let motion = b[0] * xi[0] + b[1] * xi[1] + div_xi;
    let scale_motion =
        (b[0] * xi[0] + b[1] * xi[1]).abs() + grad_xi[0][0].abs() + grad_xi[1][1].abs();

    FieldSample {
        xi,
        theta,
        dist,
        xi_transport,
        xi_len_transport,
        theta_transport,
        motion,
        scale_xi_transport,
        scale_motion,
        scale_theta,
    }
}

const CONDITION_NAMES: [&str; 5] = [
    "xi_transport",
    "xi_length_transport",
    "theta_transport",
    "theta_coercivity",
    "motion_compatibility",
];

fn measure_constants(fields: &mut CalibrationFields) {
    let (lx, ly) = fields.flow.domain();
    let n = 160;
    let d_fd = 3e-5 * lx.min(ly);
    let times = scan_times(&fields.flow);
    let mut c_coerc = f64::INFINITY;
    let mut maxima: BTreeMap<&str, f64> = CONDITION_NAMES.iter().map(|&n| (n, 0.0)).collect();
    for &t in &times {
        for j in 0..n {
            for i in 0..n {
                let x = lx * (i as f64 + 0.5) / n as f64;
                let y = ly * (j as f64 + 0.5) / n as f64;
                let s = sample_fields(fields, x, y, t, d_fd);
                let dm = s.dist.min(1.0);
                let xnorm = (s.xi[0] * s.xi[0] + s.xi[1] * s.xi[1]).sqrt();
                if s.dist > 2.0 * d_fd {
                    c_coerc = c_coerc.min((1.0 - xnorm) / (dm * dm));
                }
                let tnorm = (s.xi_transport[0].powi(2) + s.xi_transport[1].powi(2)).sqrt();
                let upd = |m: &mut BTreeMap<&str, f64>, k: &str, v: f64| {
                    let e = m.get_mut(k).unwrap();
                    if v > *e {
                        *e = v;
                    }
                };
                if dm > 1e-6 {
                    upd(
                        &mut maxima,
                        "xi_transport",
                        (tnorm - FD_NOISE * s.scale_xi_transport).max(0.0) / dm,
                    );
                    upd(
                        &mut maxima,
                        "motion_compatibility",
                        (s.motion.abs() - FD_NOISE * s.scale_motion).max(0.0) / dm,
                    );
                    upd(
                        &mut maxima,
                        "xi_length_transport",
                        (s.xi_len_transport.abs() - FD_NOISE * s.scale_xi_transport).max(0.0)
                            / (dm * dm),
                    );
                }
                if let Some(tt) = s.theta_transport {
                    if s.theta.abs() > 1e-6 {
                        upd(
                            &mut maxima,
                            "theta_transport",
                            (tt.abs() - FD_NOISE * s.scale_theta).max(0.0) / s.theta.abs(),
                        );
                    }
                }
                if s.theta.abs() > 1e-6 {
                    let wall_dist = x.min(lx - x).min(y).min(ly - y);
                    let lhs = wall_dist.min(s.dist).min(1.0);
                    upd(&mut maxima, "theta_coercivity", lhs / s.theta.abs());
                }
            }
        }
    }
    fields.coercivity_c = (0.8 * c_coerc).clamp(1e-6, 0.999);
    // Conditions that hold exactly measure zero; a modest floor keeps the
    // verification ratios insensitive to differentiation noise while still
    // flagging any O(1) violation.
    fields.constants = maxima
        .into_iter()
        .map(|(k, v)| (k.to_string(), (1.3 * v).max(0.05)))
        .collect();
}

/// One verified calibration condition.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConditionCheck {
    pub name: String,
    /// Worst `lhs / (C * bound)` over the scan; `<= 1` passes.
    pub worst_ratio: f64,
    /// `(x, y, t)` of the worst sample.
    pub location: [f64; 3],
    pub constant_used: f64,
    pub pass: bool,
}

/// Full condition report of `verify_calibration`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConditionReport {
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Absolute noise floor added to the condition bounds: tolerates
/// finite-difference noise where the exact bound degenerates to zero.
const ABS_FLOOR: f64 = 1e-9;

/// Relative accuracy of the fourth-order finite differences used in the
/// condition scans; residuals of exact cancellations carry noise of this
/// size times the magnitude of the cancelled terms.
const FD_NOISE: f64 = 1e-3;

/// Re-verifies every calibration condition on the given grid (cell centers,
/// three interior times): boundary conditions for `xi` and `B`, sign and
/// coercivity of `theta`, the `xi` coercivity, the approximate transport
/// equations, and the motion-law compatibility `|B.xi + div xi| <= C dist`.
pub fn verify_calibration(fields: &CalibrationFields, grid: &Grid) -> ConditionReport {
    let (lx, ly) = fields.flow.domain();
    let d_fd = 3e-5 * lx.min(ly);
    let times = scan_times(&fields.flow);
    let c_of = |name: &str| *fields.constants.get(name).unwrap();

    struct Worst {
        ratio: f64,
        loc: [f64; 3],
    }
    impl Worst {
        fn new() -> Self {
            Worst {
                ratio: 0.0,
                loc: [0.0; 3],
            }
        }
        fn update(&mut self, ratio: f64, loc: [f64; 3]) {
            if ratio > self.ratio {
                self.ratio = ratio;
                self.loc = loc;
            }
        }
    }

    let mut w_len = Worst::new();
    let mut w_xi_bc = Worst::new();
    let mut w_b_bc = Worst::new();
    let mut w_sign = Worst::new();
    let mut w_theta_co = Worst::new();
    let mut w_xi_tr = Worst::new();
    let mut w_xi_len_tr = Worst::new();
    let mut w_theta_tr = Worst::new();
    let mut w_motion = Worst::new();

    for &t in &times {
        // interior scan
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let [x, y] = grid.center(i, j);
                let s = sample_fields(fields, x, y, t, d_fd);
                let loc = [x, y, t];
                let dm = s.dist.min(1.0);
                let xnorm = (s.xi[0] * s.xi[0] + s.xi[1] * s.xi[1]).sqrt();
                w_len.update(
                    xnorm / (1.0 - fields.coercivity_c * dm * dm),
                    loc,
                );
                // theta sign: negative inside, positive outside
                let level = fields.flow.level_coord(x, y, t);
                if level.abs() > 1e-9 {
                    let violation = (-s.theta * level.signum()).max(0.0);
                    w_sign.update(violation / 1e-10, loc);
                }
                let wall_dist = x.min(lx - x).min(y).min(ly - y);
                let lhs = wall_dist.min(s.dist).min(1.0);
                w_theta_co.update(
                    lhs / (c_of("theta_coercivity") * s.theta.abs() + ABS_FLOOR),
                    loc,
                );
                let tnorm = (s.xi_transport[0].powi(2) + s.xi_transport[1].powi(2)).sqrt();
                let noise_tr = FD_NOISE * s.scale_xi_transport + ABS_FLOOR;
                w_xi_tr.update(tnorm / (c_of("xi_transport") * dm + noise_tr), loc);
                w_xi_len_tr.update(
                    s.xi_len_transport.abs()
                        / (c_of("xi_length_transport") * dm * dm + noise_tr),
                    loc,
                );
                if let Some(tt) = s.theta_transport {
                    w_theta_tr.update(
                        tt.abs()
                            / (c_of("theta_transport") * s.theta.abs()
                                + FD_NOISE * s.scale_theta
                                + ABS_FLOOR),
                        loc,
                    );
                }
                w_motion.update(
                    s.motion.abs()
                        / (c_of("motion_compatibility") * dm + FD_NOISE * s.scale_motion + ABS_FLOOR),
                    loc,
                );
            }
        }
        // wall boundary conditions, evaluated exactly on the walls
        let m = grid.nx.max(grid.ny);
        for k in 0..=m {
            let fx = lx * k as f64 / m as f64;
            let fy = ly * k as f64 / m as f64;
            for (p, nu, alpha_wall) in [
                ([fx, 0.0], [0.0_f64, 1.0], wall_cos_alpha(fields, Wall4::Bottom)),
                ([fx, ly], [0.0, -1.0], wall_cos_alpha(fields, Wall4::Top)),
                ([0.0, fy], [1.0, 0.0], wall_cos_alpha(fields, Wall4::Left)),
                ([lx, fy], [-1.0, 0.0], wall_cos_alpha(fields, Wall4::Right)),
            ] {
                let xi = fields.xi(p[0], p[1], t);
                let b = fields.b_field(p[0], p[1], t);
                let loc = [p[0], p[1], t];
                w_xi_bc.update(
                    ((xi[0] * nu[0] + xi[1] * nu[1]) - fields.xi_scale * alpha_wall).abs() / 1e-10,
                    loc,
                );
                w_b_bc.update((b[0] * nu[0] + b[1] * nu[1]).abs() / 1e-10, loc);
            }
        }
        // theta vanishes on the reference interface
        let rc = fields.flow.reference_curve(t, 128);
        for v in &rc.vertices {
            let th = fields.theta(v[0], v[1], t);
            w_sign.update(th.abs() / 1e-9, [v[0], v[1], t]);
        }
    }

    let mk = |name: &str, w: &Worst, constant: f64| ConditionCheck {
        name: name.to_string(),
        worst_ratio: w.ratio,
        location: w.loc,
        constant_used: constant,
        pass: w.ratio <= 1.0 + 1e-9,
    };
    ConditionReport {
        checks: vec![
            mk("xi_length_coercivity", &w_len, fields.coercivity_c),
            mk("xi_wall_angle", &w_xi_bc, 1e-10),
            mk("b_wall_tangential", &w_b_bc, 1e-10),
            mk("theta_sign_and_interface", &w_sign, 1e-10),
            mk("theta_coercivity", &w_theta_co, c_of("theta_coercivity")),
            mk("xi_transport", &w_xi_tr, c_of("xi_transport")),
            mk(
                "xi_length_transport",
                &w_xi_len_tr,
                c_of("xi_length_transport"),
            ),
            mk("theta_transport", &w_theta_tr, c_of("theta_transport")),
            mk(
                "motion_compatibility",
                &w_motion,
                c_of("motion_compatibility"),
            ),
        ],
    }
}

enum Wall4 {
    Left,
    Right,
    Bottom,
    Top,
}

/// The angle-condition target `xi . nu = cos(alpha)` per wall: the contact
/// walls of each reference flow carry its angle, all other walls are treated
/// as Neumann (`cos = 0`).
fn wall_cos_alpha(fields: &CalibrationFields, wall: Wall4) -> f64 {
    match fields.flow {
        // chord and half-disk meet their walls at pi/2
        ReferenceFlow::StationaryChord { .. } | ReferenceFlow::ShrinkingHalfDisk { .. } => 0.0,
        ReferenceFlow::StripTranslator { alpha, .. } => match wall {
            Wall4::Left | Wall4::Right => alpha.cos(),
            Wall4::Bottom | Wall4::Top => 0.0,
        },
    }
}

/// Relative entropy of an extracted interface against the calibration:
/// `c0 int_{interface} (1 - nu_A . xi)`.
pub fn relative_entropy_sharp(iface: &InterfaceCurve, fields: &CalibrationFields, t: f64) -> f64 {
    let mut acc = 0.0;
    for c in &iface.curves {
        for (k, &p) in c.vertices.iter().enumerate() {
            let xi = fields.xi(p[0], p[1], t);
            let nu = c.normals[k];
            acc += c.weights[k] * (1.0 - (nu[0] * xi[0] + nu[1] * xi[1]));
        }
    }
    C0 * acc
}

/// Bulk error `int_{A delta Ref(t)} |theta|` by cell quadrature; membership
/// of `A` uses the cell-center test `psi(u) > c0/2` (equivalent to the
/// extracted-contour side since contours never cross cell centers).
pub fn bulk_error(state: &PhaseField, fields: &CalibrationFields, t: f64) -> f64 {
    let g = state.grid;
    let mut acc = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let [x, y] = g.center(i, j);
            let in_a = psi(state.u.at(i, j)) > 0.5 * C0;
            let in_ref = fields.flow.inside(x, y, t);
            if in_a != in_ref {
                acc += fields.theta(x, y, t).abs();
            }
        }
    }
    acc * g.h * g.h
}

/// Result of the Gronwall stability check on the two error series.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GronwallReport {
    /// Smallest `C` with `relEn(T) <= relEn(0) + C int relEn` for all `T`.
    pub smallest_c_rel: f64,
    /// Smallest `C` with
    /// `bulk(T) <= bulk(0) + relEn(0) + C int (bulk + relEn)` for all `T`.
    pub smallest_c_bulk: f64,
    pub pass_rel: bool,
    pub pass_bulk: bool,
    /// Whether both series stay below `delta0 e^{C t} + slack` with
    /// `delta0 = max(relEn(0), bulk(0))` (the weak-strong uniqueness face).
    pub zero_data_bound_ok: bool,
}

/// Verifies the two Gronwall inequalities with constant `c` and additive
/// `slack`, using trapezoidal quadrature; reports the smallest constants
/// that would make them hold exactly.
pub fn gronwall_check(
    times: &[f64],
    rel_en: &[f64],
    bulk: &[f64],
    c: f64,
    slack: f64,
) -> Result<GronwallReport> {
    if times.len() != rel_en.len() || times.len() != bulk.len() || times.len() < 2 {
        return Err(Error::InvalidParameter(
            "gronwall check needs aligned series with at least two samples".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("non-monotone time grid".into()));
    }
    let n = times.len();
    let mut int_rel = vec![0.0; n];
    let mut int_both = vec![0.0; n];
    for k in 1..n {
        let dt = times[k] - times[k - 1];
        int_rel[k] = int_rel[k - 1] + 0.5 * dt * (rel_en[k] + rel_en[k - 1]);
        int_both[k] =
            int_both[k - 1] + 0.5 * dt * (rel_en[k] + rel_en[k - 1] + bulk[k] + bulk[k - 1]);
    }
    let mut c_rel: f64 = 0.0;
    let mut c_bulk: f64 = 0.0;
    let mut pass_rel = true;
    let mut pass_bulk = true;
    for k in 1..n {
        let excess_rel = rel_en[k] - rel_en[0];
        if int_rel[k] > 0.0 {
            c_rel = c_rel.max(excess_rel / int_rel[k]);
        }
        if excess_rel > c * int_rel[k] + slack {
            pass_rel = false;
        }
        let excess_bulk = bulk[k] - bulk[0] - rel_en[0];
        if int_both[k] > 0.0 {
            c_bulk = c_bulk.max(excess_bulk / int_both[k]);
        }
        if excess_bulk > c * int_both[k] + slack {
            pass_bulk = false;
        }
    }
    let delta0 = rel_en[0].max(bulk[0]);
    let zero_data_bound_ok = (0..n).all(|k| {
        let cap = delta0 * (c * times[k]).exp() + slack;
        rel_en[k] <= cap && bulk[k] <= cap
    });
    Ok(GronwallReport {
        smallest_c_rel: c_rel.max(0.0),
        smallest_c_bulk: c_bulk.max(0.0),
        pass_rel,
        pass_bulk,
        zero_data_bound_ok,
    })
}
