//! CSV formats for point patterns and periodogram fields.
//!
//! Point files carry `# dim:` and `# window:` comment headers followed by
//! one comma-separated point per row. Field files add the grid metadata
//! needed to rebuild the frequency lattice exactly.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, FrequencyGrid, PeriodogramField, PointPattern, Window};
use crate::taper::Taper;

/// 17 significant digits, enough to round-trip every `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.trim()
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("not a number: '{}'", tok.trim()) })
}

fn header_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let rest = line.strip_prefix('#')?.trim_start();
    let rest = rest.strip_prefix(key)?.trim_start();
    Some(rest.strip_prefix(':')?.trim())
}

fn parse_window(v: &str, line: usize) -> Result<Window> {
    let vals = v
        .split_whitespace()
        .map(|t| parse_f64(t, line))
        .collect::<Result<Vec<_>>>()?;
    if vals.is_empty() || vals.len() % 2 != 0 {
        return Err(Error::Parse { line, msg: "window needs lo/hi pairs".into() });
    }
    let bounds: Vec<_> = vals.chunks(2).map(|p| (p[0], p[1])).collect();
    Window::from_bounds(&bounds).map_err(|e| Error::Parse { line, msg: e.to_string() })
}

fn window_line(w: &Window) -> String {
    let parts: Vec<String> = w.bounds().iter().map(|(lo, hi)| format!("{} {}", num(*lo), num(*hi))).collect();
    format!("# window: {}", parts.join(" "))
}

pub fn read_pattern(path: impl AsRef<Path>) -> Result<PointPattern> {
    let file = fs::File::open(path)?;
    parse_pattern(BufReader::new(file))
}

pub fn parse_pattern<R: BufRead>(reader: R) -> Result<PointPattern> {
    let mut dim: Option<usize> = None;
    let mut window: Option<Window> = None;
    let mut points = Vec::new();
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if t.starts_with('#') {
            if let Some(v) = header_value(t, "dim") {
                dim = Some(v.parse().map_err(|_| Error::Parse { line: line_no, msg: format!("bad dim '{v}'") })?);
            } else if let Some(v) = header_value(t, "window") {
                window = Some(parse_window(v, line_no)?);
            }
            continue;
        }
        let w = window
            .as_ref()
            .ok_or_else(|| Error::Parse { line: line_no, msg: "missing '# window:' header".into() })?;
        let p = t.split(',').map(|tok| parse_f64(tok, line_no)).collect::<Result<Vec<_>>>()?;
        if p.len() != w.dim() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {} coordinates, got {}", w.dim(), p.len()),
            });
        }
        if !w.contains(&p) {
            return Err(Error::Parse { line: line_no, msg: "point outside window".into() });
        }
        points.push(p);
        lines.push(line_no);
    }
    let window = window.ok_or_else(|| Error::Parse { line: 0, msg: "missing '# window:' header".into() })?;
    if let Some(d) = dim {
        if d != window.dim() {
            return Err(Error::Parse {
                line: 0,
                msg: format!("dim {d} disagrees with window dimension {}", window.dim()),
            });
        }
    }
    PointPattern::new(window, points).map_err(|e| match e {
        Error::DuplicatePoint { row } => Error::Parse { line: lines[row], msg: "duplicate point".into() },
        Error::PointOutsideWindow { row } => Error::Parse { line: lines[row], msg: "point outside window".into() },
        other => other,
    })
}

pub fn write_pattern(pattern: &PointPattern, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    write_pattern_to(pattern, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_pattern_to<W: Write>(pattern: &PointPattern, out: &mut W) -> Result<()> {
    writeln!(out, "# dim: {}", pattern.dim())?;
    writeln!(out, "{}", window_line(pattern.window()))?;
    for p in pattern.points() {
        let row: Vec<String> = p.iter().map(|&x| num(x)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_field(field: &PeriodogramField, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    write_field_to(field, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_field_to<W: Write>(field: &PeriodogramField, out: &mut W) -> Result<()> {
    let g = &field.grid;
    let d = g.dim();
    writeln!(out, "# dim: {d}")?;
    writeln!(out, "{}", window_line(&field.window))?;
    writeln!(out, "# spacing: {}", num(g.spacing()))?;
    writeln!(out, "# domain: {} {}", num(g.domain().d0), num(g.domain().d1))?;
    writeln!(out, "# taper: {}", field.taper)?;
    writeln!(out, "# lambda_hat: {}", num(field.lambda_hat))?;
    let mut cols: Vec<String> = (1..=d).map(|i| format!("k{i}")).collect();
    cols.extend((1..=d).map(|i| format!("omega{i}")));
    cols.push("value".into());
    writeln!(out, "{}", cols.join(","))?;
    for (i, v) in field.values.iter().enumerate() {
        let mut row: Vec<String> = g.lattice_index(i).iter().map(|k| k.to_string()).collect();
        row.extend(g.frequency(i).iter().map(|&w| num(w)));
        row.push(num(*v));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<PeriodogramField> {
    let file = fs::File::open(path)?;
    parse_field(BufReader::new(file))
}

pub fn parse_field<R: BufRead>(reader: R) -> Result<PeriodogramField> {
    let mut window = None;
    let mut spacing = None;
    let mut domain = None;
    let mut taper = None;
    let mut lambda_hat = None;
    let mut rows: Vec<(usize, Vec<i64>, f64)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if t.starts_with('#') {
            if let Some(v) = header_value(t, "window") {
                window = Some(parse_window(v, line_no)?);
            } else if let Some(v) = header_value(t, "spacing") {
                spacing = Some(parse_f64(v, line_no)?);
            } else if let Some(v) = header_value(t, "domain") {
                let p: Vec<f64> = v.split_whitespace().map(|x| parse_f64(x, line_no)).collect::<Result<_>>()?;
                if p.len() != 2 {
                    return Err(Error::Parse { line: line_no, msg: "domain needs d0 d1".into() });
                }
                domain = Some(DomainSpec::new(p[0], p[1]).map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?);
            } else if let Some(v) = header_value(t, "taper") {
                taper = Some(v.parse::<Taper>().map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?);
            } else if let Some(v) = header_value(t, "lambda_hat") {
                lambda_hat = Some(parse_f64(v, line_no)?);
            }
            continue;
        }
        if t.starts_with('k') {
            continue;
        }
        let d = window
            .as_ref()
            .map(Window::dim)
            .ok_or_else(|| Error::Parse { line: line_no, msg: "missing '# window:' header".into() })?;
        let toks: Vec<&str> = t.split(',').collect();
        if toks.len() != 2 * d + 1 {
            return Err(Error::Parse { line: line_no, msg: format!("expected {} columns", 2 * d + 1) });
        }
        let k = toks[..d]
            .iter()
            .map(|s| s.trim().parse::<i64>().map_err(|_| Error::Parse { line: line_no, msg: format!("bad index '{s}'") }))
            .collect::<Result<Vec<_>>>()?;
        rows.push((line_no, k, parse_f64(toks[2 * d], line_no)?));
    }
    let missing = |what: &str| Error::Parse { line: 0, msg: format!("missing '# {what}:' header") };
    let window = window.ok_or_else(|| missing("window"))?;
    let spacing = spacing.ok_or_else(|| missing("spacing"))?;
    let domain = domain.ok_or_else(|| missing("domain"))?;
    let grid = FrequencyGrid::with_spacing(window.dim(), spacing, domain)?;
    if rows.len() != grid.len() {
        return Err(Error::Parse {
            line: 0,
            msg: format!("field has {} rows but the grid has {} frequencies", rows.len(), grid.len()),
        });
    }
    let mut values = vec![0.0; grid.len()];
    let mut seen = vec![false; grid.len()];
    for (line, k, v) in rows {
        let pos = grid
            .find(&k)
            .ok_or_else(|| Error::Parse { line, msg: "index not on the declared grid".into() })?;
        if seen[pos] {
            return Err(Error::Parse { line, msg: "repeated frequency index".into() });
        }
        seen[pos] = true;
        values[pos] = v;
    }
    PeriodogramField::new(
        grid,
        values,
        taper.unwrap_or_default(),
        window,
        lambda_hat.unwrap_or(0.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn single_point() {
        let p = parse_pattern(Cursor::new("# window: -5 5 -5 5\n0.1,0.2\n")).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.window().sides(), &[10.0, 10.0]);
    }

    #[test]
    fn outside_and_duplicate_rows() {
        let e = parse_pattern(Cursor::new("# window: -5 5 -5 5\n0.1,0.2\n6.0,0.0\n")).unwrap_err();
        assert!(e.to_string().contains("point outside window"), "{e}");
        assert!(e.to_string().contains("line 3"), "{e}");
        let e = parse_pattern(Cursor::new("# window: -5 5 -5 5\n0.1,0.2\n1,1\n0.1,0.2\n")).unwrap_err();
        assert!(e.to_string().contains("duplicate point"), "{e}");
        assert!(parse_pattern(Cursor::new("0.1,0.2\n")).is_err());
        assert!(parse_pattern(Cursor::new("# window: 0 5\n1\n")).is_err());
    }

    #[test]
    fn roundtrip_is_bitwise() {
        let w = Window::cube(2, 10.0).unwrap();
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.618_033_988_749_894_9;
                vec![5.0 * (t.sin()), 4.999_999 * (t * 1.3).cos() / 3.0_f64.sqrt()]
            })
            .collect();
        let p = PointPattern::new(w, pts).unwrap();
        let mut buf = Vec::new();
        write_pattern_to(&p, &mut buf).unwrap();
        let q = parse_pattern(Cursor::new(buf)).unwrap();
        assert_eq!(p.coords().len(), q.coords().len());
        for (a, b) in p.coords().iter().zip(q.coords()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
