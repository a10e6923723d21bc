use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimate::{MetaDataset, StudySummary};

enum Spread {
    Se(usize),
    Var(usize),
}

/// Reads a study table with header `study_id,effect,se` or
/// `study_id,effect,var`. Row numbers in errors count the header as row 1.
pub fn parse_studies(path: impl AsRef<Path>) -> Result<MetaDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    read_studies(file)
}

pub fn read_studies<R: Read>(reader: R) -> Result<MetaDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Input {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let missing = |name: &str| Error::Input {
        row: 1,
        message: format!("missing column `{name}`"),
    };
    let id_col = col("study_id").ok_or_else(|| missing("study_id"))?;
    let effect_col = col("effect").ok_or_else(|| missing("effect"))?;
    let spread = match (col("se"), col("var")) {
        (Some(i), None) => Spread::Se(i),
        (None, Some(i)) => Spread::Var(i),
        (Some(_), Some(_)) => {
            return Err(Error::Input {
                row: 1,
                message: "give either `se` or `var`, not both".into(),
            })
        }
        (None, None) => return Err(missing("se` or `var")),
    };

    let mut studies = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Input {
            row,
            message: e.to_string(),
        })?;
        let field = |j: usize, name: &str| -> Result<f64> {
            let raw = rec.get(j).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Input {
                    row,
                    message: format!("`{name}` is not a finite number: `{raw}`"),
                })
        };
        let effect = field(effect_col, "effect")?;
        let variance = match spread {
            Spread::Se(j) => {
                let se = field(j, "se")?;
                if !(se > 0.0) {
                    return Err(Error::Input {
                        row,
                        message: format!("se must be positive, got {se}"),
                    });
                }
                se * se
            }
            Spread::Var(j) => {
                let v = field(j, "var")?;
                if !(v > 0.0) {
                    return Err(Error::Input {
                        row,
                        message: format!("var must be positive, got {v}"),
                    });
                }
                v
            }
        };
        let id = rec.get(id_col).unwrap_or("").to_string();
        studies.push(StudySummary::new(id, effect, variance));
    }
    if studies.len() < 2 {
        return Err(Error::Input {
            row: studies.len() + 1,
            message: format!("need at least 2 studies, found {}", studies.len()),
        });
    }
    MetaDataset::new(studies)
}

/// Writes `study_id,effect,var` with shortest round-trip numbers.
pub fn write_studies<W: Write>(d: &MetaDataset, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let wrap = |e: csv::Error| Error::numeric(format!("writing study table: {e}"));
    w.write_record(["study_id", "effect", "var"])
        .map_err(wrap)?;
    for s in d.studies() {
        w.write_record([
            s.id.clone(),
            s.effect.to_string(),
            s.within_variance.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("writing study table", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn se_column_is_squared() {
        let d = read_studies("study_id,effect,se\na,0,1\nb,2,1\nc,4,1\n".as_bytes()).unwrap();
        assert_eq!(d.effects(), [0.0, 2.0, 4.0]);
        assert_eq!(d.variances(), [1.0, 1.0, 1.0]);
        assert_eq!(d.label(2), "c");
    }

    #[test]
    fn var_column_gives_the_same_dataset() {
        let a = read_studies("study_id,effect,se\na,0.5,0.3\nb,2,1.5\n".as_bytes()).unwrap();
        let b = read_studies("study_id,effect,var\na,0.5,0.09\nb,2,2.25\n".as_bytes()).unwrap();
        assert_eq!(a.effects(), b.effects());
        for (x, y) in a.variances().iter().zip(b.variances()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn row_numbers_in_errors() {
        let err = read_studies("study_id,effect,se\na,0,1\nb,2,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Input { row: 3, .. }), "{err}");
        let err = read_studies("study_id,effect,se\na,x,1\nb,2,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Input { row: 2, .. }), "{err}");
        let err = read_studies("study_id,effect\na,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Input { row: 1, .. }), "{err}");
        let err = read_studies("study_id,effect,var\na,0,1\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("at least 2"), "{err}");
    }

    #[test]
    fn round_trip_is_exact() {
        let d = MetaDataset::from_effects(
            vec![0.1 + 0.2, -1.0 / 3.0, 1e-300, 12345.678901234567],
            vec![2.0 / 3.0, 0.1, 5e-7, 1e10],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_studies(&d, &mut buf).unwrap();
        let back = read_studies(buf.as_slice()).unwrap();
        assert_eq!(back.effects(), d.effects());
        assert_eq!(back.variances(), d.variances());
    }
}
