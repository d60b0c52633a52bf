//! Trajectory CSV ingestion and export.
//!
//! One format: UTF-8, `.` decimal separator, header `track_id,t,x,y`, SI
//! units. Rows are grouped by track id (first-appearance order), sorted by
//! time within each track; tracks with duplicate timestamps are skipped and
//! counted rather than failing the whole file.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use dirprim_core::motion::{RawTrajectory, TrackPoint};

pub const CSV_HEADER: &str = "track_id,t,x,y";

#[derive(Debug)]
pub enum CsvError {
    Io(io::Error),
    /// Header row does not match [`CSV_HEADER`].
    BadHeader {
        found: String,
    },
    /// Wrong column count or an unparsable number, with the 1-based line.
    BadRow {
        line: usize,
        message: String,
    },
    /// The file parsed but produced no usable trajectory.
    NoTracks,
}

impl fmt::Display for CsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "{e}"),
            Self::BadHeader { found } => {
                write!(f, "expected header '{CSV_HEADER}', found '{found}'")
            }
            Self::BadRow { line, message } => write!(f, "line {line}: {message}"),
            Self::NoTracks => write!(f, "no usable trajectories in file"),
        }
    }
}

impl std::error::Error for CsvError {}

impl From<io::Error> for CsvError {
    fn from(e: io::Error) -> Self {
        CsvError::Io(e)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    /// Tracks dropped for duplicate timestamps or fewer than two samples.
    pub skipped_tracks: usize,
}

pub fn parse_trajectories(path: &Path) -> Result<(Vec<RawTrajectory>, ParseStats), CsvError> {
    let text = fs::read_to_string(path)?;
    parse_trajectories_str(&text)
}

pub fn parse_trajectories_str(text: &str) -> Result<(Vec<RawTrajectory>, ParseStats), CsvError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) if line.trim().is_empty() => continue,
            Some((_, line)) => break line,
            None => {
                return Err(CsvError::BadHeader {
                    found: String::new(),
                })
            }
        }
    };
    if header.trim() != CSV_HEADER {
        return Err(CsvError::BadHeader {
            found: header.trim().to_string(),
        });
    }

    // Group rows by track id, keeping first-appearance order for
    // deterministic output.
    let mut order: Vec<String> = Vec::new();
    let mut groups: Vec<Vec<TrackPoint>> = Vec::new();
    let mut index_of = std::collections::HashMap::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CsvError::BadRow {
                line: line_no,
                message: format!("expected 4 columns, found {}", fields.len()),
            });
        }
        let id = fields[0].trim();
        if id.is_empty() {
            return Err(CsvError::BadRow {
                line: line_no,
                message: "empty track_id".to_string(),
            });
        }
        let parse = |name: &str, raw: &str| -> Result<f64, CsvError> {
            let v: f64 = raw.trim().parse().map_err(|_| CsvError::BadRow {
                line: line_no,
                message: format!("cannot parse {name} value '{}'", raw.trim()),
            })?;
            if !v.is_finite() {
                return Err(CsvError::BadRow {
                    line: line_no,
                    message: format!("non-finite {name} value '{}'", raw.trim()),
                });
            }
            Ok(v)
        };
        let point = TrackPoint {
            t: parse("t", fields[1])?,
            x: parse("x", fields[2])?,
            y: parse("y", fields[3])?,
        };
        let slot = *index_of.entry(id.to_string()).or_insert_with(|| {
            order.push(id.to_string());
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(point);
    }

    let mut stats = ParseStats::default();
    let mut tracks = Vec::new();
    for (id, mut points) in order.into_iter().zip(groups) {
        points.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("finite timestamps"));
        let duplicate = points.windows(2).any(|p| p[1].t <= p[0].t);
        if duplicate || points.len() < 2 {
            stats.skipped_tracks += 1;
            continue;
        }
        tracks.push(RawTrajectory::new(id, points).expect("sorted, deduplicated samples"));
    }
    Ok((tracks, stats))
}

pub fn write_trajectories(path: &Path, tracks: &[RawTrajectory]) -> Result<(), CsvError> {
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for track in tracks {
        for p in track.points() {
            writeln!(out, "{},{},{},{}", track.id(), p.t, p.x, p.y)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_row_single_track() {
        let (tracks, stats) =
            parse_trajectories_str("track_id,t,x,y\na,0.0,0.0,0.0\na,1.0,1.0,0.5\n").unwrap();
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].id(), "a");
        assert_eq!(tracks[0].points().len(), 2);
        assert_eq!(stats.skipped_tracks, 0);
    }

    #[test]
    fn duplicate_timestamp_skips_only_that_track() {
        let text = "track_id,t,x,y\n\
                    a,0.0,0.0,0.0\na,0.0,1.0,0.0\n\
                    b,0.0,0.0,0.0\nb,1.0,2.0,0.0\n";
        let (tracks, stats) = parse_trajectories_str(text).unwrap();
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].id(), "b");
        assert_eq!(stats.skipped_tracks, 1);
    }

    #[test]
    fn empty_file_with_header_is_empty() {
        let (tracks, stats) = parse_trajectories_str("track_id,t,x,y\n").unwrap();
        assert!(tracks.is_empty());
        assert_eq!(stats.skipped_tracks, 0);
    }

    #[test]
    fn missing_column_reports_line() {
        let err = parse_trajectories_str("track_id,t,x,y\na,0.0,0.0\n").unwrap_err();
        match err {
            CsvError::BadRow { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_numeric_field_reports_line() {
        let err = parse_trajectories_str("track_id,t,x,y\na,0.0,zero,0.0\n").unwrap_err();
        match err {
            CsvError::BadRow { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains('x'), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(matches!(
            parse_trajectories_str("id,t,x,y\n"),
            Err(CsvError::BadHeader { .. })
        ));
    }

    #[test]
    fn out_of_order_rows_are_sorted() {
        let (tracks, _) =
            parse_trajectories_str("track_id,t,x,y\na,1.0,1.0,0.0\na,0.0,0.0,0.0\n").unwrap();
        assert_eq!(tracks[0].points()[0].t, 0.0);
    }
}
