use std::io::Write;

use super::bench::{BenchResult, CellSummary};
use super::metrics::CalibrationBin;
use super::SimError;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `mode,method,p,trial,wall_time_s,iterations,converged,max_error_vs_direct`
pub fn write_bench_results<W: Write>(out: W, rows: &[BenchResult]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "mode",
        "method",
        "p",
        "trial",
        "wall_time_s",
        "iterations",
        "converged",
        "max_error_vs_direct",
    ])?;
    for r in rows {
        w.write_record([
            r.mode.name().to_string(),
            r.method.name().to_string(),
            r.p.to_string(),
            r.trial.to_string(),
            r.wall_time.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
            opt(r.max_error_vs_direct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Converged iterative runs only:
/// `mode,method,p,trial,max_error_vs_direct,log10_error`
pub fn write_error_dist<W: Write>(out: W, rows: &[BenchResult]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mode", "method", "p", "trial", "max_error_vs_direct", "log10_error"])?;
    for r in rows.iter().filter(|r| r.method.is_iterative()) {
        let Some(e) = r.max_error_vs_direct else { continue };
        let log10 = if e > 0.0 { e.log10().to_string() } else { String::new() };
        w.write_record([
            r.mode.name().to_string(),
            r.method.name().to_string(),
            r.p.to_string(),
            r.trial.to_string(),
            e.to_string(),
            log10,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `mode,method,p,trials,failures,median_wall_time_s,median_iterations,median_log10_error`
pub fn write_bench_summary<W: Write>(out: W, cells: &[CellSummary]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "mode",
        "method",
        "p",
        "trials",
        "failures",
        "median_wall_time_s",
        "median_iterations",
        "median_log10_error",
    ])?;
    for c in cells {
        w.write_record([
            c.mode.name().to_string(),
            c.method.name().to_string(),
            c.p.to_string(),
            c.trials.to_string(),
            c.failures.to_string(),
            c.median_wall_time.to_string(),
            opt(c.median_iterations),
            opt(c.median_log10_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `bin,lower,upper,count,mean_pip,tp_fraction,se`
pub fn write_calibration<W: Write>(out: W, bins: &[CalibrationBin]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin", "lower", "upper", "count", "mean_pip", "tp_fraction", "se"])?;
    for (i, b) in bins.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            b.lower.to_string(),
            b.upper.to_string(),
            b.count.to_string(),
            b.mean_pip.to_string(),
            b.tp_fraction.to_string(),
            b.se.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{calibration_bins, DesignMode};
    use crate::solvers::Method;

    #[test]
    fn bench_csv_layout() {
        let rows = vec![
            BenchResult {
                mode: DesignMode::Dep,
                method: Method::Sor,
                p: 50,
                trial: 3,
                wall_time: 0.25,
                iterations: 200,
                converged: false,
                max_error_vs_direct: None,
            },
            BenchResult {
                mode: DesignMode::Ind,
                method: Method::Icf,
                p: 50,
                trial: 0,
                wall_time: 0.5,
                iterations: 6,
                converged: true,
                max_error_vs_direct: Some(1e-9),
            },
        ];
        let mut buf = Vec::new();
        write_bench_results(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "mode,method,p,trial,wall_time_s,iterations,converged,max_error_vs_direct");
        assert_eq!(lines[1], "dep,sor,50,3,0.25,200,false,");
        assert_eq!(lines[2], "ind,icf,50,0,0.5,6,true,0.000000001");

        let mut buf = Vec::new();
        write_error_dist(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().ends_with(",-9"));
    }

    #[test]
    fn calibration_csv_has_twenty_rows() {
        let bins = calibration_bins(&[0.1, 0.92], &[false, true]).unwrap();
        let mut buf = Vec::new();
        write_calibration(&mut buf, &bins).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 21);
        assert!(text.contains("\n3,0.1,0.15000000000000002,1,0.1,0,"));
    }
}
