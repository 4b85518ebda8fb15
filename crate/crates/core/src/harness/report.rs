//! CSV formats and error-order fitting.
//!
//! Report rows: `logK,exact,approx,abs_err,err_order,norm_err`.
//! Surfaces: `expiry,strike,price[,put]`, one row per quote, expiries
//! contiguous and increasing. Numbers are written in Rust's shortest
//! round-trip form, so a rerun under the same build is byte-identical.

use std::io::{Read, Write};

use crate::arbitrage::SurfaceGrid;
use crate::bs::MarketFrame;
use crate::stats::{linear_fit, mann_kendall};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub log_k: f64,
    pub exact: f64,
    pub approx: f64,
    pub abs_err: f64,
    pub err_order: f64,
    pub norm_err: f64,
}

impl ConvergenceRow {
    pub fn new(log_k: f64, exact: f64, approx: f64, err_order: f64) -> Self {
        let abs_err = (approx - exact).abs();
        Self {
            log_k,
            exact,
            approx,
            abs_err,
            err_order,
            norm_err: abs_err / err_order,
        }
    }
}

/// Shortest round-trip text, scientific outside `[1e-5, 1e16)`.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub const REPORT_HEADER: [&str; 6] = ["logK", "exact", "approx", "abs_err", "err_order", "norm_err"];

pub fn write_report<W: Write>(w: W, rows: &[ConvergenceRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REPORT_HEADER)?;
    for r in rows {
        out.write_record(
            [r.log_k, r.exact, r.approx, r.abs_err, r.err_order, r.norm_err]
                .iter()
                .map(|v| fmt_num(*v)),
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_report<R: Read>(r: R) -> Result<Vec<ConvergenceRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("bad number '{s}' in report"))))
            .collect::<Result<_>>()?;
        if v.len() != 6 {
            return Err(Error::Config(format!("report row has {} fields, expected 6", v.len())));
        }
        rows.push(ConvergenceRow {
            log_k: v[0],
            exact: v[1],
            approx: v[2],
            abs_err: v[3],
            err_order: v[4],
            norm_err: v[5],
        });
    }
    Ok(rows)
}

/// Call surface and optional puts from the surface CSV format.
pub fn read_surface<R: Read>(r: R, frame: MarketFrame) -> Result<(SurfaceGrid, Option<Vec<Vec<f64>>>)> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let has_put = match names.as_slice() {
        ["expiry", "strike", "price"] => false,
        ["expiry", "strike", "price", "put"] => true,
        _ => {
            return Err(Error::Config(format!(
                "surface header must be 'expiry,strike,price[,put]', got '{}'",
                names.join(",")
            )))
        }
    };
    let mut expiries: Vec<f64> = Vec::new();
    let mut strikes: Vec<Vec<f64>> = Vec::new();
    let mut prices: Vec<Vec<f64>> = Vec::new();
    let mut puts: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<f64> {
            let s = rec.get(i).unwrap_or("").trim();
            s.parse()
                .map_err(|_| Error::Config(format!("row {}: field {} = '{s}' is not a number", line + 2, i + 1)))
        };
        let t = field(0)?;
        if expiries.last() != Some(&t) {
            expiries.push(t);
            strikes.push(Vec::new());
            prices.push(Vec::new());
            puts.push(Vec::new());
        }
        let i = expiries.len() - 1;
        strikes[i].push(field(1)?);
        prices[i].push(field(2)?);
        if has_put {
            puts[i].push(field(3)?);
        }
    }
    let grid = SurfaceGrid::new(frame, expiries, strikes, prices)?;
    Ok((grid, has_put.then_some(puts)))
}

pub fn write_surface<W: Write>(w: W, grid: &SurfaceGrid, puts: Option<&[Vec<f64>]>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if puts.is_some() {
        out.write_record(["expiry", "strike", "price", "put"])?;
    } else {
        out.write_record(["expiry", "strike", "price"])?;
    }
    for (i, t) in grid.expiries.iter().enumerate() {
        for (j, (k, c)) in grid.strikes[i].iter().zip(&grid.prices[i]).enumerate() {
            let mut rec = vec![fmt_num(*t), fmt_num(*k), fmt_num(*c)];
            if let Some(p) = puts {
                rec.push(fmt_num(p[i][j]));
            }
            out.write_record(rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayVerdict {
    Decaying,
    NonDecay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorFit {
    /// `exp(intercept)` of the fit of `log|error|` on `log(error_order)`.
    pub constant: f64,
    pub slope: f64,
    pub verdict: DecayVerdict,
}

/// Least squares of `log abs_err` against `log err_order`. The verdict is
/// non-decay unless the errors fall along the ladder (Mann-Kendall
/// statistic at most -0.5).
pub fn fit_error_order(rows: &[ConvergenceRow]) -> Result<ErrorFit> {
    if rows.len() < 8 {
        return Err(Error::InsufficientGrid(format!(
            "{} rows, at least 8 needed for an error-order fit",
            rows.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.abs_err > 0.0 && r.err_order > 0.0)
        .map(|r| (r.err_order.ln(), r.abs_err.ln()))
        .unzip();
    let fit = linear_fit(&x, &y).ok_or_else(|| {
        Error::DegenerateRegression("error orders have no spread (or errors vanish)".into())
    })?;
    let errs: Vec<f64> = rows.iter().map(|r| r.abs_err).collect();
    Ok(ErrorFit {
        constant: fit.intercept.exp(),
        slope: fit.slope,
        verdict: if mann_kendall(&errs) <= -0.5 {
            DecayVerdict::Decaying
        } else {
            DecayVerdict::NonDecay
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(f: impl Fn(f64) -> f64) -> Vec<ConvergenceRow> {
        (1..=10)
            .map(|i| {
                let order = 1.0 / i as f64;
                ConvergenceRow::new(i as f64, 0.0, f(order), order)
            })
            .collect()
    }

    #[test]
    fn synthetic_fits() {
        let fit = fit_error_order(&rows(|o| 3.0 * o)).unwrap();
        assert!((fit.constant - 3.0).abs() < 1e-9);
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert_eq!(fit.verdict, DecayVerdict::Decaying);
        let fit = fit_error_order(&rows(|_| 0.5)).unwrap();
        assert_eq!(fit.verdict, DecayVerdict::NonDecay);
    }

    #[test]
    fn degenerate_fits() {
        let flat: Vec<ConvergenceRow> = (0..8).map(|i| ConvergenceRow::new(i as f64, 0.0, 1.0, 0.5)).collect();
        assert!(matches!(fit_error_order(&flat), Err(Error::DegenerateRegression(_))));
        assert!(fit_error_order(&rows(|o| o)[..5]).is_err());
    }

    #[test]
    fn report_round_trip() {
        let r = rows(|o| 3.0 * o);
        let mut buf = Vec::new();
        write_report(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("logK,exact,approx,abs_err,err_order,norm_err\n"));
        assert_eq!(read_report(buf.as_slice()).unwrap(), r);
    }

    #[test]
    fn surface_round_trip() {
        let frame = MarketFrame::unit(1.0).unwrap();
        let g = SurfaceGrid::new(
            frame,
            vec![0.5, 1.0],
            vec![vec![0.9, 1.0, 1.1], vec![0.8, 1.2]],
            vec![vec![0.15, 0.08, 0.03], vec![0.25, 0.05]],
        )
        .unwrap();
        let puts = vec![vec![0.05, 0.08, 0.13], vec![0.05, 0.25]];
        let mut buf = Vec::new();
        write_surface(&mut buf, &g, Some(&puts)).unwrap();
        let (back, p) = read_surface(buf.as_slice(), frame).unwrap();
        assert_eq!(back, g);
        assert_eq!(p.unwrap(), puts);
        assert_eq!(fmt_num(4.5e-217), "4.5e-217");
        assert_eq!(fmt_num(0.25), "0.25");
        assert!(read_surface("a,b\n1,2\n".as_bytes(), frame).is_err());
    }
}
