//! CSV formats shared with the command-line frontend, and atomic file
//! writes. Lines starting with `#` are metadata comments; every reader here
//! skips them.

use std::fs;
use std::path::Path;

use crate::analytic::AnalyticCurve;
use crate::empirical::{CensorReason, EmpiricalCurve, IdtOutcome};
use crate::error::{Error, Result};
use crate::netgen::Graph;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Write `content` to `path` atomically: temp file in the same directory,
/// then rename over the target.
pub fn atomic_write(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(&tmp, content).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(file))
}

fn column_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| parse_err(path, format!("missing column '{name}'")))
}

fn field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    line: u64,
    path: &Path,
) -> Result<T> {
    let raw = record
        .get(idx)
        .ok_or_else(|| parse_err(path, format!("line {line}: missing field {idx}")))?;
    raw.trim()
        .parse()
        .map_err(|_| parse_err(path, format!("line {line}: cannot parse '{raw}'")))
}

/// Graph CSV body: header `u,v`, one undirected edge per row with u < v.
pub fn graph_csv(graph: &Graph) -> String {
    let mut out = String::from("u,v\n");
    for (u, v) in graph.edges() {
        out.push_str(&format!("{u},{v}\n"));
    }
    out
}

/// Read a graph CSV written by [`graph_csv`] (node ids 0-based and dense;
/// the node count is one past the largest id seen).
pub fn read_graph_csv(path: &Path) -> Result<Graph> {
    let mut rdr = reader(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, e.to_string()))?
        .clone();
    let ui = column_index(&headers, "u", path)?;
    let vi = column_index(&headers, "v", path)?;
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut max_node = 0u32;
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        let line = row as u64 + 2;
        let u: u32 = field(&record, ui, line, path)?;
        let v: u32 = field(&record, vi, line, path)?;
        max_node = max_node.max(u).max(v);
        edges.push((u, v));
    }
    if edges.is_empty() {
        return Err(parse_err(path, "no edges"));
    }
    Graph::from_edges(max_node as usize + 1, &edges)
        .map_err(|e| parse_err(path, format!("invalid edge list: {e}")))
}

/// Analytic curve CSV body with its metadata comment line.
pub fn analytic_csv(curve: &AnalyticCurve) -> String {
    let mut out = format!(
        "# eps={},c_eff={},i_hat={},rho={},branch={},degenerate={}\n",
        curve.eps,
        curve.c_eff,
        curve.i_hat,
        curve.rho,
        if curve.broken { "broken" } else { "symmetric" },
        curve.degenerate,
    );
    out.push_str("k,i0_bits,t_k_bits,i1_upper_bits,d_steps\n");
    for row in &curve.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.k, row.i0, row.t_k, row.i1_upper, row.d
        ));
    }
    out
}

/// Points (k, D) of an analytic curve CSV.
pub fn read_analytic_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = reader(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, e.to_string()))?
        .clone();
    let ki = column_index(&headers, "k", path)?;
    let di = column_index(&headers, "d_steps", path)?;
    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        let line = row as u64 + 2;
        out.push((
            field::<f64>(&record, ki, line, path)?,
            field::<f64>(&record, di, line, path)?,
        ));
    }
    if out.is_empty() {
        return Err(parse_err(path, "no data rows"));
    }
    Ok(out)
}

/// Empirical curve CSV body.
pub fn empirical_csv(curve: &EmpiricalCurve) -> String {
    let mut out = String::from("k,n_units,mean_idt_sweeps,sem_idt,censored\n");
    for row in &curve.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.degree, row.n_units, row.mean, row.sem, row.censored
        ));
    }
    out
}

/// Points (k, mean, sem) of an empirical curve CSV.
pub fn read_empirical_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let mut rdr = reader(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, e.to_string()))?
        .clone();
    let ki = column_index(&headers, "k", path)?;
    let mi = column_index(&headers, "mean_idt_sweeps", path)?;
    let si = column_index(&headers, "sem_idt", path)?;
    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        let line = row as u64 + 2;
        out.push((
            field::<f64>(&record, ki, line, path)?,
            field::<f64>(&record, mi, line, path)?,
            field::<f64>(&record, si, line, path)?,
        ));
    }
    if out.is_empty() {
        return Err(parse_err(path, "no data rows"));
    }
    Ok(out)
}

/// Per-unit detail CSV body.
pub fn per_unit_csv(outcomes: &[IdtOutcome], degrees: &[usize]) -> String {
    let mut out =
        String::from("unit,degree,idt_sweeps,censored,fit_slope,fit_intercept,fit_points\n");
    for (unit, (outcome, &degree)) in outcomes.iter().zip(degrees).enumerate() {
        match outcome {
            IdtOutcome::Fitted {
                idt,
                slope,
                intercept,
                points,
            } => out.push_str(&format!(
                "{unit},{degree},{idt},none,{slope},{intercept},{points}\n"
            )),
            IdtOutcome::AlreadyDissipated => out.push_str(&format!(
                "{unit},{degree},0,none,,,0\n"
            )),
            IdtOutcome::Censored(reason) => {
                let tag = match reason {
                    CensorReason::TooFewPoints => "too_few_points",
                    CensorReason::NonDecaying => "non_decaying",
                };
                out.push_str(&format!("{unit},{degree},,{tag},,,\n"));
            }
        }
    }
    out
}

/// Oracle lagged-MI CSV body: `lag,unit,mi_bits`.
pub fn oracle_csv(rows: &[(usize, usize, f64)]) -> String {
    let mut out = String::from("lag,unit,mi_bits\n");
    for &(lag, unit, mi) in rows {
        out.push_str(&format!("{lag},{unit},{mi}\n"));
    }
    out
}

/// Trend CSV body: raw and smoothed series plus the fit stats as comments.
pub fn trend_csv(
    xs: &[f64],
    raw: &[f64],
    smooth: &[f64],
    fit: &crate::trend::LinearFit,
    fit_from: f64,
    fit_to: f64,
) -> String {
    let mut out = format!(
        "# slope={},slope_se={},intercept={},intercept_se={},fit_from={},fit_to={},n_fit={}\n",
        fit.slope, fit.slope_se, fit.intercept, fit.intercept_se, fit_from, fit_to, fit.n_points
    );
    out.push_str("x,y_raw,y_smooth\n");
    for ((x, r), s) in xs.iter().zip(raw).zip(smooth) {
        out.push_str(&format!("{x},{r},{s}\n"));
    }
    out
}

/// Read `x,y` data (extra columns ignored, comments skipped).
pub fn read_xy_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = reader(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, e.to_string()))?
        .clone();
    let xi = column_index(&headers, "x", path)?;
    let yi = column_index(&headers, "y", path)?;
    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        let line = row as u64 + 2;
        out.push((
            field::<f64>(&record, xi, line, path)?,
            field::<f64>(&record, yi, line, path)?,
        ));
    }
    if out.is_empty() {
        return Err(parse_err(path, "no data rows"));
    }
    Ok(out)
}

/// State-dump CSV body: `t,unit,state` rows for a trace of configurations.
pub fn state_dump_csv(trace: &[crate::dynamics::SpinConfig]) -> String {
    let mut out = String::from("t,unit,state\n");
    for (t, config) in trace.iter().enumerate() {
        for (unit, &s) in config.states().iter().enumerate() {
            out.push_str(&format!("{t},{unit},{s}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn graph_roundtrip() {
        let g = Graph::star(4);
        let dir = tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let mut body = String::from("# cmd=gen n=5 seed=1\n");
        body.push_str(&graph_csv(&g));
        atomic_write(&path, &body).unwrap();
        let back = read_graph_csv(&path).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_graph_csv(Path::new("/nonexistent/g.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn malformed_graph_is_parse_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        atomic_write(&path, "u,v\n0,zero\n").unwrap();
        assert!(matches!(read_graph_csv(&path), Err(Error::Parse { .. })));
        atomic_write(&path, "a,b\n0,1\n").unwrap();
        assert!(matches!(read_graph_csv(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn xy_reader_ignores_extra_columns_and_comments() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.csv");
        atomic_write(&path, "# c=1\nx,y,z\n1,2,9\n3,4,9\n").unwrap();
        let pts = read_xy_csv(&path).unwrap();
        assert_eq!(pts, vec![(1.0, 2.0), (3.0, 4.0)]);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.txt");
        atomic_write(&path, "one").unwrap();
        atomic_write(&path, "two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert!(!path.with_extension("txt.tmp").exists());
    }
}
