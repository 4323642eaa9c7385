//! Reading and writing kernels tabulated on quadrature grids.
//!
//! ```text
//! # gridx: x1,...,xm
//! # gridy: y1,...,yn
//! # family: chebcc
//! G(x1,y1),...,G(x1,yn)
//! ...
//! ```
//!
//! Further `#` lines after the headers are comments. Weights are recomputed
//! from the declared family, never stored.

use std::fmt::Write as _;
use std::path::Path;

use gsketch_core::hsop::DiscretizedKernel;
use gsketch_core::quadrature::{GridFamily, QuadratureGrid};
use gsketch_core::DMatrix;

use crate::error::{io_err, Error, Result};

pub fn family_name(family: GridFamily) -> &'static str {
    match family {
        GridFamily::ChebyshevCC => "chebcc",
        GridFamily::UniformTrapezoid => "trapezoid",
    }
}

pub fn family_from_name(name: &str) -> Option<GridFamily> {
    match name {
        "chebcc" => Some(GridFamily::ChebyshevCC),
        "trapezoid" => Some(GridFamily::UniformTrapezoid),
        _ => None,
    }
}

// `{:e}` is the shortest representation that parses back to the same bits.
fn join(values: impl IntoIterator<Item = f64>) -> String {
    let mut s = String::new();
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v:e}").unwrap();
    }
    s
}

/// Renders a kernel in the tabulated format. `comment`, if given, becomes
/// one extra `#` line after the headers.
pub fn render_kernel(kernel: &DiscretizedKernel, comment: Option<&str>) -> Result<String> {
    let gx = kernel.grid_x();
    let gy = kernel.grid_y();
    if gx.family() != gy.family() {
        return Err(Error::config("the tabulated format declares one grid family for both grids"));
    }
    let mut out = String::new();
    writeln!(out, "# gridx: {}", join(gx.nodes().iter().copied())).unwrap();
    writeln!(out, "# gridy: {}", join(gy.nodes().iter().copied())).unwrap();
    writeln!(out, "# family: {}", family_name(gx.family())).unwrap();
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(out, "# {line}").unwrap();
        }
    }
    for row in kernel.values().row_iter() {
        out.push_str(&join(row.iter().copied()));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_kernel(path: &Path, kernel: &DiscretizedKernel, comment: Option<&str>) -> Result<()> {
    std::fs::write(path, render_kernel(kernel, comment)?).map_err(io_err(path))
}

fn parse_list(path: &Path, what: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|e| Error::Format {
                path: path.to_path_buf(),
                msg: format!("{what}: {t:?}: {e}"),
            })
        })
        .collect()
}

/// Parses the tabulated format; `path` is used for messages and as the
/// kernel's recorded source.
pub fn parse_kernel(path: &Path, text: &str) -> Result<DiscretizedKernel> {
    let bad = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };
    let mut header = text.lines().filter(|l| l.starts_with('#'));
    let mut field = |key: &str| -> Result<String> {
        let line = header.next().ok_or_else(|| bad(format!("missing \"# {key}:\" header")))?;
        line.trim_start_matches('#')
            .trim()
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(':'))
            .map(|r| r.trim().to_string())
            .ok_or_else(|| bad(format!("expected \"# {key}:\", found {line:?}")))
    };
    let xs = parse_list(path, "gridx", &field("gridx")?)?;
    let ys = parse_list(path, "gridy", &field("gridy")?)?;
    let fam_name = field("family")?;
    let family = family_from_name(&fam_name).ok_or_else(|| bad(format!("unknown grid family {fam_name:?}")))?;
    let gx = QuadratureGrid::from_nodes(family, &xs).map_err(|e| bad(format!("gridx: {e}")))?;
    let gy = QuadratureGrid::from_nodes(family, &ys).map_err(|e| bad(format!("gridy: {e}")))?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = DMatrix::zeros(xs.len(), ys.len());
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rows >= xs.len() {
            return Err(bad(format!("more than {} value rows", xs.len())));
        }
        if rec.len() != ys.len() {
            return Err(bad(format!("row {} has {} values, expected {}", rows + 1, rec.len(), ys.len())));
        }
        for (j, field) in rec.iter().enumerate() {
            values[(rows, j)] = field
                .parse::<f64>()
                .map_err(|e| bad(format!("row {}: {field:?}: {e}", rows + 1)))?;
        }
        rows += 1;
    }
    if rows != xs.len() {
        return Err(bad(format!("found {rows} value rows, expected {}", xs.len())));
    }
    Ok(DiscretizedKernel::tabulated(gx, gy, values, path.display().to_string())?)
}

pub fn read_kernel(path: &Path) -> Result<DiscretizedKernel> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_kernel(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsketch_core::hsop::BuiltinKernel;

    #[test]
    fn render_then_parse_is_exact() {
        let g = QuadratureGrid::new(GridFamily::ChebyshevCC, 17, -1.0, 1.0).unwrap();
        let k = DiscretizedKernel::builtin(BuiltinKernel::Bessel, g.clone(), g).unwrap();
        let text = render_kernel(&k, Some("config: {}")).unwrap();
        let back = parse_kernel(Path::new("mem.csv"), &text).unwrap();
        assert_eq!(back.values(), k.values());
        assert_eq!(back.grid_x(), k.grid_x());
    }

    #[test]
    fn malformed_files_are_rejected() {
        let p = Path::new("bad.csv");
        let ok = "# gridx: -1,1\n# gridy: -1,0,1\n# family: trapezoid\n1,2,3\n4,5,6\n";
        assert!(parse_kernel(p, ok).is_ok());
        for text in [
            "# gridx: -1,1\n# family: trapezoid\n1,2,3\n",
            "# gridx: -1,1\n# gridy: -1,0,1\n# family: gauss\n1,2,3\n4,5,6\n",
            "# gridx: -1,1\n# gridy: -1,0,1\n# family: trapezoid\n1,2,3\n",
            "# gridx: -1,1\n# gridy: -1,0,1\n# family: trapezoid\n1,2\n4,5,6\n",
            "# gridx: -1,1\n# gridy: -1,0.5,1\n# family: trapezoid\n1,2,3\n4,5,6\n",
            "# gridx: -1,1\n# gridy: -1,0,1\n# family: trapezoid\n1,x,3\n4,5,6\n",
        ] {
            assert!(matches!(parse_kernel(p, text), Err(Error::Format { .. })), "{text}");
        }
    }
}
