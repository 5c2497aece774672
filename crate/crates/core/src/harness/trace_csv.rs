//! Trace CSV: one row per iterate, scientific notation, empty cells for
//! unavailable values, LF line endings.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ppm::IterationTrace;

pub const TRACE_HEADER: [&str; 9] = [
    "k",
    "c_k",
    "f",
    "cost_gap",
    "dist_S",
    "residual_norm",
    "eps_k",
    "delta_k",
    "criterion_ok",
];

/// One CSV row. Step columns describe the step leaving x_k and are empty on
/// the final row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub c: Option<f64>,
    pub f: f64,
    pub cost_gap: Option<f64>,
    pub dist: Option<f64>,
    pub residual_norm: Option<f64>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub criterion_ok: Option<bool>,
}

impl TraceRow {
    pub fn from_trace(trace: &IterationTrace) -> Vec<TraceRow> {
        trace
            .records
            .iter()
            .map(|r| {
                let s = r.step.as_ref();
                TraceRow {
                    k: r.k,
                    c: s.map(|s| s.c),
                    f: r.f,
                    cost_gap: r.cost_gap,
                    dist: r.dist,
                    residual_norm: s.map(|s| s.residual_norm),
                    eps: s.and_then(|s| s.eps),
                    delta: s.and_then(|s| s.delta),
                    criterion_ok: s.and_then(|s| s.criterion_ok),
                }
            })
            .collect()
    }
}

fn num(v: Option<f64>) -> String {
    // `{:e}` prints the shortest representation that reads back exactly.
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn write_trace_csv<W: Write>(trace: &IterationTrace, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for row in TraceRow::from_trace(trace) {
        w.write_record([
            row.k.to_string(),
            num(row.c),
            num(Some(row.f)),
            num(row.cost_gap),
            num(row.dist),
            num(row.residual_norm),
            num(row.eps),
            num(row.delta),
            row.criterion_ok.map(|b| b.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_trace_csv(trace: &IterationTrace, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_trace_csv(trace, std::io::BufWriter::new(file))
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::ParseError {
        line,
        message: message.into(),
    }
}

/// Parse a trace CSV back into rows.
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = r.records();
    let header = records
        .next()
        .ok_or_else(|| parse_error(1, "missing header"))?
        .map_err(|e| parse_error(1, e.to_string()))?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(parse_error(
            1,
            format!("expected header {}", TRACE_HEADER.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != TRACE_HEADER.len() {
            return Err(parse_error(
                line,
                format!("expected {} fields, got {}", TRACE_HEADER.len(), rec.len()),
            ));
        }
        let opt = |i: usize| -> Result<Option<f64>> {
            let s = &rec[i];
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| parse_error(line, format!("{}: not a number: {s:?}", TRACE_HEADER[i])))
        };
        let k = rec[0]
            .parse::<usize>()
            .map_err(|_| parse_error(line, format!("k: not an index: {:?}", &rec[0])))?;
        let f = opt(2)?.ok_or_else(|| parse_error(line, "f is required"))?;
        let criterion_ok = match &rec[8] {
            "" => None,
            "true" => Some(true),
            "false" => Some(false),
            other => {
                return Err(parse_error(
                    line,
                    format!("criterion_ok: expected true/false, got {other:?}"),
                ))
            }
        };
        rows.push(TraceRow {
            k,
            c: opt(1)?,
            f,
            cost_gap: opt(3)?,
            dist: opt(4)?,
            residual_norm: opt(5)?,
            eps: opt(6)?,
            delta: opt(7)?,
            criterion_ok,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ippm::{run_ippm, CriterionKind, InexactCriterion, IppmOptions};
    use crate::ppm::{run_ppm, PpmOptions, StepSchedule};
    use crate::zoo::{
        generate_lasso_data, make_benchmark, make_ml_problem, BenchmarkId, MlProblemParams,
    };
    use ndarray::array;

    fn render(trace: &IterationTrace) -> String {
        let mut buf = Vec::new();
        write_trace_csv(trace, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn quad1d_rows_and_round_trip() {
        let p = make_benchmark(BenchmarkId::Quad1d);
        let opts = PpmOptions {
            max_iter: 3,
            ..PpmOptions::default()
        };
        let t = run_ppm(&p, &array![1.0], &StepSchedule::constant(1.0), &opts).unwrap();
        let text = render(&t);
        assert!(
            text.starts_with("k,c_k,f,cost_gap,dist_S,residual_norm,eps_k,delta_k,criterion_ok\n")
        );
        assert!(!text.contains('\r'));
        let rows = parse_trace_csv(&text).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows, TraceRow::from_trace(&t));
        assert_eq!(rows[3].c, None);
        assert!(text
            .lines()
            .nth(2)
            .unwrap()
            .starts_with("1,1e0,1.111111111111111e-1,"));
    }

    #[test]
    fn missing_solution_oracle_leaves_dist_empty() {
        let data = generate_lasso_data(5, 8, 2, 1).unwrap();
        let p = make_ml_problem(MlProblemParams::lasso(1.0), data.into()).unwrap();
        let opts = PpmOptions {
            max_iter: 2,
            ..PpmOptions::default()
        };
        let t = run_ppm(
            &p,
            &ndarray::Array1::ones(8),
            &StepSchedule::constant(0.16),
            &opts,
        )
        .unwrap();
        let rows = parse_trace_csv(&render(&t)).unwrap();
        assert!(rows
            .iter()
            .all(|r| r.dist.is_none() && r.cost_gap.is_none()));
    }

    #[test]
    fn criterion_column() {
        let p = make_benchmark(BenchmarkId::Quad1d);
        let crit = InexactCriterion::new(CriterionKind::APrime).with_eps(0.1, 0.5);
        let t = run_ippm(
            &p,
            &array![1.0],
            &StepSchedule::constant(1.0),
            &crit,
            &IppmOptions::default(),
        )
        .unwrap();
        let rows = parse_trace_csv(&render(&t)).unwrap();
        assert_eq!(rows[0].criterion_ok, Some(true));
        assert_eq!(rows[0].eps, Some(0.1));
        assert_eq!(rows[1].eps, Some(0.05));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_trace_csv("").is_err());
        assert!(parse_trace_csv("a,b\n").is_err());
        let head = TRACE_HEADER.join(",");
        assert!(parse_trace_csv(&format!("{head}\n0,,x,,,,,,\n")).is_err());
        assert!(parse_trace_csv(&format!("{head}\n0,,1,,,,,,maybe\n")).is_err());
        assert!(parse_trace_csv(&format!("{head}\n0,,1\n")).is_err());
        assert_eq!(parse_trace_csv(&format!("{head}\n")).unwrap(), vec![]);
    }
}
