//! Shape-preserving piecewise cubic Hermite interpolation (Fritsch–Butland slopes).

#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() || m0 == 0.0 {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

impl Pchip {
    /// `x` strictly increasing, at least two points.
    pub fn new(x: &[f64], y: &[f64]) -> Pchip {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let m: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = m[0];
            d[1] = m[0];
        } else {
            for k in 1..n - 1 {
                if m[k - 1] * m[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / m[k - 1] + w2 / m[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], m[0], m[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
        }
        Pchip { x: x.to_vec(), y: y.to_vec(), d }
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Slopes at the knots.
    pub fn slopes(&self) -> &[f64] {
        &self.d
    }

    fn interval(&self, xv: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|p| p.partial_cmp(&xv).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(k) => k.min(n - 2),
            Err(k) => k.saturating_sub(1).min(n - 2),
        }
    }

    /// Value and first derivative; extrapolates with the end cubic outside the knots.
    pub fn eval(&self, xv: f64) -> (f64, f64) {
        let k = self.interval(xv);
        let h = self.x[k + 1] - self.x[k];
        let s = (xv - self.x[k]) / h;
        let (y0, y1, d0, d1) = (self.y[k], self.y[k + 1], self.d[k], self.d[k + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
        let dh00 = 6.0 * s2 - 6.0 * s;
        let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
        let dh01 = -6.0 * s2 + 6.0 * s;
        let dh11 = 3.0 * s2 - 2.0 * s;
        let dv = (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1;
        (v, dv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_linear_data() {
        let x = [0.0, 0.3, 1.0, 1.5];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let p = Pchip::new(&x, &y);
        for k in 0..=30 {
            let xv = 1.5 * k as f64 / 30.0;
            let (v, d) = p.eval(xv);
            assert!((v - (2.0 * xv + 1.0)).abs() < 1e-14 && (d - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn flat_segment_stays_flat() {
        let p = Pchip::new(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 1.0, 2.0]);
        for k in 0..=20 {
            let (v, _) = p.eval(1.0 + k as f64 / 20.0);
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn monotone_data_gives_monotone_interpolant(incs in proptest::collection::vec(0.0f64..1.0, 3..12)) {
            let n = incs.len() + 1;
            let x: Vec<f64> = (0..n).map(|k| k as f64 + 0.1 * (k * k) as f64).collect();
            let mut y = vec![0.0];
            for d in &incs { let last = *y.last().unwrap(); y.push(last + d); }
            let p = Pchip::new(&x, &y);
            let mut prev = f64::MIN;
            for k in 0..=400 {
                let xv = x[0] + (x[n - 1] - x[0]) * k as f64 / 400.0;
                let (v, d) = p.eval(xv);
                prop_assert!(v >= prev - 1e-12);
                prop_assert!(d >= -1e-12);
                prev = v;
            }
        }
    }
}
