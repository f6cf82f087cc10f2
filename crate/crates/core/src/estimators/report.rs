//! Log-log slope fits and the report format shared by every experiment.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line through `(ln λ, ln value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS deviation of `ln value` from the line.
    pub residual: f64,
}

impl Fit {
    pub fn predict(&self, lambda: f64) -> f64 {
        (self.intercept + self.slope * lambda.ln()).exp()
    }
}

/// Fits `value ≈ C λ^slope`.
pub fn fit_exponent(lambdas: &[f64], values: &[f64]) -> Result<Fit> {
    if lambdas.len() != values.len() {
        return Err(Error::domain("fit needs as many values as grid points"));
    }
    if lambdas.len() < 4 {
        return Err(Error::domain(format!("fit needs at least 4 points, got {}", lambdas.len())));
    }
    if let Some(v) = values.iter().chain(lambdas).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::domain(format!("fit needs positive finite data, got {v}")));
    }
    let x: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("fit needs at least two distinct grid points"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(Fit {
        slope,
        intercept,
        residual,
    })
}

/// Geometric grid `λ₀ 2^{j/2}` covering `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut j = 0;
    loop {
        let l = lo * 2f64.powf(j as f64 / 2.0);
        if l > hi * (1.0 + 1e-12) {
            break;
        }
        out.push(l);
        j += 1;
    }
    out
}

/// What the fitted slope is expected to do.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Expectation {
    Near { target: f64, tolerance: f64 },
    AtLeast { min: f64 },
    AtMost { max: f64 },
}

impl Expectation {
    pub fn holds(&self, slope: f64) -> bool {
        match *self {
            Expectation::Near { target, tolerance } => (slope - target).abs() <= tolerance,
            Expectation::AtLeast { min } => slope >= min,
            Expectation::AtMost { max } => slope <= max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The fit residual exceeded its cap, so no verdict is emitted.
    Inconclusive,
    /// The report carries no expectation.
    Descriptive,
}

/// A measured quantity over a `λ`-grid with its fitted growth exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    /// Extra named columns, one value per grid point.
    pub columns: Vec<(String, Vec<f64>)>,
    pub fit: Option<Fit>,
    pub expectation: Option<Expectation>,
    pub residual_cap: f64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, lambdas: Vec<f64>, values: Vec<f64>) -> Self {
        ExperimentReport {
            name: name.into(),
            lambdas,
            values,
            columns: Vec::new(),
            fit: None,
            expectation: None,
            residual_cap: 0.25,
            verdict: Verdict::Descriptive,
            notes: Vec::new(),
        }
    }

    pub fn with_column(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.columns.push((name.into(), values));
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    /// Fits the slope and, given an expectation, emits a verdict when the
    /// fit residual stays below `residual_cap`.
    pub fn judge(mut self, expectation: Option<Expectation>, residual_cap: f64) -> Result<Self> {
        let fit = fit_exponent(&self.lambdas, &self.values)?;
        self.fit = Some(fit);
        self.expectation = expectation;
        self.residual_cap = residual_cap;
        self.verdict = match expectation {
            None => Verdict::Descriptive,
            Some(_) if !(fit.residual < residual_cap) => Verdict::Inconclusive,
            Some(e) if e.holds(fit.slope) => Verdict::Pass,
            Some(_) => Verdict::Fail,
        };
        Ok(self)
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// CSV with columns `lambda, value, <extra…>, fitted, log_deviation`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["lambda".to_string(), "value".to_string()];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        if self.fit.is_some() {
            header.push("fitted".into());
            header.push("log_deviation".into());
        }
        w.write_record(&header)?;
        for (i, (&l, &v)) in self.lambdas.iter().zip(&self.values).enumerate() {
            let mut rec = vec![format!("{l:e}"), format!("{v:e}")];
            rec.extend(self.columns.iter().map(|(_, c)| format!("{:e}", c[i])));
            if let Some(f) = self.fit {
                let p = f.predict(l);
                rec.push(format!("{p:e}"));
                rec.push(format!("{:e}", v.ln() - p.ln()));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let l = geometric_grid(4.0, 64.0);
        let v: Vec<f64> = l.iter().map(|x| x.sqrt()).collect();
        let f = fit_exponent(&l, &v).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-14 && f.residual < 1e-14);
        let c = fit_exponent(&l, &vec![3.0; l.len()]).unwrap();
        assert!(c.slope.abs() < 1e-14);
    }

    #[test]
    fn noisy_sixth_root() {
        let l = geometric_grid(8.0, 512.0);
        let v: Vec<f64> = l.iter().map(|x| x.powf(1.0 / 6.0) * (1.0 + 0.05 * x.sin())).collect();
        assert!((fit_exponent(&l, &v).unwrap().slope - 1.0 / 6.0).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_data() {
        assert!(fit_exponent(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(fit_exponent(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn geometric_grid_endpoints() {
        let g = geometric_grid(10.0, 60.0);
        assert_eq!(g.len(), 6);
        assert!((g[5] - 10.0 * 2f64.powf(2.5)).abs() < 1e-12);
    }

    #[test]
    fn verdicts() {
        let l = geometric_grid(4.0, 64.0);
        let v: Vec<f64> = l.iter().map(|x| x.sqrt()).collect();
        let r = ExperimentReport::new("t", l.clone(), v.clone())
            .judge(Some(Expectation::Near { target: 0.5, tolerance: 0.1 }), 0.1)
            .unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let r = ExperimentReport::new("t", l, v)
            .judge(Some(Expectation::AtMost { max: 0.1 }), 0.1)
            .unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("lambda,value,fitted,log_deviation"));
    }
}
