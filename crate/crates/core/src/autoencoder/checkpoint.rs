//! Text checkpoints of trained coefficients and loss traces.
//!
//! A checkpoint lists sparse triplets, sorted by matrix, dimension, row and
//! column:
//!
//! ```text
//! # dims <n> synsets <|S|> words <|W|> nnz <k>
//! E <d> <synset> <word> <value>
//! ...
//! D <d> <word> <synset> <value>
//! ```
//!
//! Values are written in shortest round-trip form, so reading a checkpoint
//! restores the coefficients bit for bit.

use std::io::{BufRead, Write};

use super::system::DimensionSystem;
use super::train::TrainedModel;
use crate::error::{Error, Result};
use crate::resource::SparsityPattern;

fn fmt_value(v: f64) -> String {
    if v == 0.0 {
        "0e0".to_owned()
    } else {
        format!("{v:e}")
    }
}

pub fn write_checkpoint<W: Write>(
    pattern: &SparsityPattern,
    systems: &[DimensionSystem],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(
        out,
        "# dims {} synsets {} words {} nnz {}",
        systems.len(),
        pattern.num_synsets(),
        pattern.num_words(),
        pattern.nnz()
    )?;
    for (d, sys) in systems.iter().enumerate() {
        // pattern order is already (synset, word)
        for (k, &(j, i)) in pattern.entries().iter().enumerate() {
            writeln!(out, "E {d} {j} {i} {}", fmt_value(sys.e[k]))?;
        }
    }
    for (d, sys) in systems.iter().enumerate() {
        for i in 0..pattern.num_words() {
            for &k in pattern.word_entries(i) {
                let (j, _) = pattern.entries()[k];
                writeln!(out, "D {d} {i} {j} {}", fmt_value(sys.d[k]))?;
            }
        }
    }
    out.flush()
}

pub fn write_model_checkpoint<W: Write>(model: &TrainedModel, out: W) -> std::io::Result<()> {
    write_checkpoint(&model.pattern, &model.systems, out)
}

/// Read coefficients back onto `pattern`. Every pattern entry must be
/// present exactly once per matrix and dimension; off-pattern triplets are
/// rejected.
pub fn read_checkpoint<R: BufRead>(
    reader: R,
    pattern: &SparsityPattern,
) -> Result<Vec<DimensionSystem>> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io("<checkpoint>", e))?,
        None => return Err(Error::Checkpoint("empty file".to_owned())),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let dims = match fields.as_slice() {
        ["#", "dims", n, "synsets", s, "words", w, "nnz", k] => {
            let parse = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| Error::Checkpoint(format!("malformed header `{header}`")))
            };
            let (n, s, w, k) = (parse(n)?, parse(s)?, parse(w)?, parse(k)?);
            if (s, w, k) != (pattern.num_synsets(), pattern.num_words(), pattern.nnz()) {
                return Err(Error::Checkpoint(format!(
                    "checkpoint is for {s} synsets / {w} words / {k} lexemes, resource has {} / {} / {}",
                    pattern.num_synsets(),
                    pattern.num_words(),
                    pattern.nnz()
                )));
            }
            n
        }
        _ => return Err(Error::Checkpoint(format!("malformed header `{header}`"))),
    };

    let nnz = pattern.nnz();
    let mut e = vec![f64::NAN; dims * nnz];
    let mut d = vec![f64::NAN; dims * nnz];
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<checkpoint>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        let [matrix, dim, row, col, value] = fields.as_slice() else {
            return Err(Error::parse(
                line_no,
                "expected `<E|D> <d> <row> <col> <value>`",
            ));
        };
        let index = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::parse(line_no, format!("bad index `{v}`")))
        };
        let (dim, row, col) = (index(dim)?, index(row)?, index(col)?);
        let value: f64 = value
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad value `{value}`")))?;
        if dim >= dims {
            return Err(Error::parse(line_no, format!("dimension {dim} >= {dims}")));
        }
        let (target, synset, word) = match *matrix {
            "E" => (&mut e, row, col),
            "D" => (&mut d, col, row),
            other => return Err(Error::parse(line_no, format!("unknown matrix `{other}`"))),
        };
        let k = (synset < pattern.num_synsets() && word < pattern.num_words())
            .then(|| pattern.find(synset, word))
            .flatten()
            .ok_or_else(|| {
                Error::parse(line_no, format!("({row}, {col}) is outside the pattern"))
            })?;
        let slot = &mut target[dim * nnz + k];
        if !slot.is_nan() {
            return Err(Error::parse(line_no, "duplicate entry"));
        }
        *slot = value;
    }
    if e.iter().chain(&d).any(|v| !v.is_finite()) {
        return Err(Error::Checkpoint(
            "missing or non-finite coefficients".to_owned(),
        ));
    }

    Ok((0..dims)
        .map(|dim| DimensionSystem {
            e: e[dim * nnz..(dim + 1) * nnz].to_vec(),
            d: d[dim * nnz..(dim + 1) * nnz].to_vec(),
        })
        .collect())
}

/// Loss traces as TSV: `iteration dimension total synset lexeme relation`.
/// Iteration 0 is the initial system.
pub fn write_loss_trace<W: Write>(model: &TrainedModel, mut out: W) -> std::io::Result<()> {
    writeln!(out, "iteration\tdimension\ttotal\tsynset\tlexeme\trelation")?;
    for (d, trace) in model.traces.iter().enumerate() {
        for (t, l) in std::iter::once(&trace.initial)
            .chain(&trace.steps)
            .enumerate()
        {
            writeln!(
                out,
                "{t}\t{d}\t{}\t{}\t{}\t{}",
                fmt_value(l.total),
                fmt_value(l.synset),
                fmt_value(l.lexeme),
                fmt_value(l.relation)
            )?;
        }
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern() -> SparsityPattern {
        SparsityPattern::from_entries(2, 3, [(0, 0), (0, 1), (1, 0), (1, 2)]).unwrap()
    }

    fn systems() -> Vec<DimensionSystem> {
        vec![
            DimensionSystem {
                e: vec![0.1, -0.0, 1.0 / 3.0, 1e-300],
                d: vec![0.5, 0.25, -1.75, 2.0],
            },
            DimensionSystem {
                e: vec![1.0; 4],
                d: vec![std::f64::consts::PI; 4],
            },
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let p = pattern();
        let mut buf = Vec::new();
        write_checkpoint(&p, &systems(), &mut buf).unwrap();
        let back = read_checkpoint(buf.as_slice(), &p).unwrap();
        assert_eq!(back, systems());
    }

    #[test]
    fn sorted_layout() {
        let p = pattern();
        let mut buf = Vec::new();
        write_checkpoint(&p, &systems()[..1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# dims 1 synsets 2 words 3 nnz 4");
        assert_eq!(lines[1], "E 0 0 0 1e-1");
        assert_eq!(lines[2], "E 0 0 1 0e0");
        // decoder rows are words
        assert_eq!(lines[5], "D 0 0 0 5e-1");
        assert_eq!(lines[6], "D 0 0 1 -1.75e0");
        assert_eq!(lines[7], "D 0 1 0 2.5e-1");
        assert_eq!(lines[8], "D 0 2 1 2e0");
    }

    #[test]
    fn rejects_off_pattern_and_missing() {
        let p = pattern();
        let text = "# dims 1 synsets 2 words 3 nnz 4\nE 0 1 1 0.5\n";
        assert!(matches!(
            read_checkpoint(text.as_bytes(), &p),
            Err(Error::Parse { line: 2, .. })
        ));
        let text = "# dims 1 synsets 2 words 3 nnz 4\nE 0 0 0 0.5\n";
        assert!(matches!(
            read_checkpoint(text.as_bytes(), &p),
            Err(Error::Checkpoint(_))
        ));
        let text = "# dims 1 synsets 9 words 3 nnz 4\n";
        assert!(matches!(
            read_checkpoint(text.as_bytes(), &p),
            Err(Error::Checkpoint(_))
        ));
    }
}
