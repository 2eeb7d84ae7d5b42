//! Adaptive Dormand-Prince 5(4) integration with dense sample recording.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-8, h0: 1e-2, h_min: 1e-12, max_steps: 200_000 }
    }
}

/// Accepted step `(t, y, f(t, y))`.
#[derive(Clone, Debug)]
pub struct OdeSample {
    pub t: f64,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

#[derive(Debug)]
pub enum OdeStop<E> {
    /// Right-hand side failed at the start point.
    Rhs(E),
    /// `accept` vetoed an accepted step; integration stopped at the last good sample.
    Vetoed(E),
    /// Step size underflow (typically repeated right-hand-side failures).
    StepTooSmall { t: f64, last: Option<E> },
    TooManySteps { t: f64 },
}

#[derive(Debug, Default, Clone, Copy)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`. A failing right-hand side
/// rejects the step; `accept` may veto accepted states. Samples (including
/// the start) are pushed to `out` when provided.
pub fn dopri5<E, F, A>(
    mut f: F,
    mut accept: A,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
    mut out: Option<&mut Vec<OdeSample>>,
) -> Result<(Vec<f64>, OdeStats), (OdeStop<E>, Vec<f64>, f64, OdeStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    A: FnMut(f64, &[f64]) -> Result<(), E>,
{
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    if let Err(e) = f(t, &y, &mut k1) {
        return Err((OdeStop::Rhs(e), y, t, stats));
    }
    if let Some(o) = out.as_deref_mut() {
        o.push(OdeSample { t, y: y.clone(), dy: k1.clone() });
    }
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut h = opts.h0.min(t1 - t0);
    let mut last_err: Option<E> = None;
    while t < t1 {
        if stats.steps + stats.rejected >= opts.max_steps {
            return Err((OdeStop::TooManySteps { t }, y, t, stats));
        }
        if h < opts.h_min {
            return Err((OdeStop::StepTooSmall { t, last: last_err }, y, t, stats));
        }
        let last_step = t + h >= t1;
        if last_step {
            h = t1 - t;
        }
        let stage = |coef: &[(f64, &Vec<f64>)], tmp: &mut Vec<f64>| {
            for i in 0..n {
                let mut s = y[i];
                for (c, k) in coef {
                    s += h * c * k[i];
                }
                tmp[i] = s;
            }
        };
        let mut ok = true;
        macro_rules! eval {
            ($tc:expr, $coef:expr, $k:ident) => {
                if ok {
                    stage($coef, &mut tmp);
                    if let Err(e) = f(t + $tc * h, &tmp, &mut $k) {
                        ok = false;
                        last_err = Some(e);
                    }
                }
            };
        }
        eval!(C2, &[(A21, &k1)], k2);
        eval!(C3, &[(A31, &k1), (A32, &k2)], k3);
        eval!(C4, &[(A41, &k1), (A42, &k2), (A43, &k3)], k4);
        eval!(C5, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], k5);
        eval!(1.0, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], k6);
        if ok {
            stage(&[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], &mut ynew);
            if let Err(e) = f(t + h, &ynew, &mut k7) {
                ok = false;
                last_err = Some(e);
            }
        }
        if !ok {
            stats.rejected += 1;
            h *= 0.25;
            continue;
        }
        let mut err = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / n as f64).sqrt();
        if err <= 1.0 {
            let tn = if last_step { t1 } else { t + h };
            if let Err(e) = accept(tn, &ynew) {
                stats.steps += 1;
                return Err((OdeStop::Vetoed(e), y, t, stats));
            }
            t = tn;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            stats.steps += 1;
            if let Some(o) = out.as_deref_mut() {
                o.push(OdeSample { t, y: y.clone(), dy: k1.clone() });
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    Ok((y, stats))
}

/// Cubic Hermite interpolation between two samples.
pub fn hermite(a: &OdeSample, b: &OdeSample, t: f64) -> Vec<f64> {
    let h = b.t - a.t;
    if h == 0.0 {
        return a.y.clone();
    }
    let s = (t - a.t) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..a.y.len()).map(|i| h00 * a.y[i] + h10 * h * a.dy[i] + h01 * b.y[i] + h11 * h * b.dy[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |_t: f64, y: &[f64], d: &mut [f64]| -> Result<(), ()> {
            d[0] = y[1];
            d[1] = -y[0];
            Ok(())
        };
        let mut samples = Vec::new();
        let (y, stats) = dopri5(f, |_, _| Ok(()), 0.0, &[1.0, 0.0], 10.0, &OdeOptions::default(), Some(&mut samples)).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-6);
        assert!(stats.steps > 10);
        let mid = hermite(&samples[3], &samples[4], 0.5 * (samples[3].t + samples[4].t));
        assert!((mid[0] - (0.5 * (samples[3].t + samples[4].t)).cos()).abs() < 1e-5);
    }

    #[test]
    fn failing_rhs_shrinks_the_step() {
        // the right-hand side refuses y > 1.5; integration must stop short
        let f = |_t: f64, y: &[f64], d: &mut [f64]| if y[0] > 1.5 { Err("out") } else { d[0] = 1.0; Ok(()) };
        let r = dopri5(f, |_, _| Ok(()), 0.0, &[0.0], 3.0, &OdeOptions::default(), None);
        match r {
            Err((OdeStop::StepTooSmall { t, .. }, _, _, _)) => assert!((t - 1.5).abs() < 1e-6),
            other => panic!("unexpected {other:?}"),
        }
    }
}
