//! CSV and plain-text formats for matrices and reports.
//!
//! Numbers are written with six decimals and undefined statistics as `NA`.
//! Scored matrices carry a one-line preamble with kind, scheme and option
//! counts so they can be read back without the item bank; on reading, each
//! value is snapped to the admissible value it rounds from, which makes a
//! write/read round trip exact.

use std::fmt::Write as _;

use num_traits::{One, Zero};

use crate::error::{Error, Result, Stat, Undefined};
use crate::experiment::ExperimentReport;
use crate::irt::{FitDiagnostics, IrtParams, Selectivity};
use crate::matrix::{
    corrective_element, rational_to_f64, Item, ItemBank, MatrixKind, Outcome, PruneReport,
    Rational, ResponseMatrix, Scheme, ScoreVector, ScoredMatrix,
};
use crate::reliability::ReliabilityReport;
use crate::stats::{Intercorrelations, ItemStats};

pub const NA: &str = "NA";

/// Six-decimal rendering without a negative zero.
pub fn fmt6(v: f64) -> String {
    if !v.is_finite() {
        return NA.to_string();
    }
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

pub fn fmt_stat(s: &Stat) -> String {
    match s {
        Ok(v) => fmt6(*v),
        Err(_) => NA.to_string(),
    }
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// A CSV record with the 1-based line it started on.
struct Record {
    line: usize,
    fields: Vec<String>,
}

fn read_records(text: &str, first_line: usize) -> Result<Vec<Record>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(line + first_line - 1, 0, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize) + first_line - 1;
        let fields: Vec<String> = rec.iter().map(|f| f.trim().to_string()).collect();
        if fields.len() == 1 && fields[0].is_empty() {
            continue;
        }
        out.push(Record { line, fields });
    }
    Ok(out)
}

fn check_width(rec: &Record, width: usize) -> Result<()> {
    if rec.fields.len() != width {
        return Err(parse_error(
            rec.line,
            rec.fields.len().min(width) + 1,
            format!("expected {width} fields, found {}", rec.fields.len()),
        ));
    }
    Ok(())
}

fn csv_string(rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    for row in rows {
        writer.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("flushing to memory")).expect("utf-8 input")
}

pub fn read_item_bank(text: &str) -> Result<ItemBank> {
    let records = read_records(text, 1)?;
    let (header, rows) = records
        .split_first()
        .ok_or_else(|| parse_error(1, 1, "missing header row"))?;
    check_width(header, 2)?;
    if header.fields[0] != "item_id" || header.fields[1] != "options" {
        return Err(parse_error(header.line, 1, "header must be `item_id,options`"));
    }
    let mut items = Vec::with_capacity(rows.len());
    for rec in rows {
        check_width(rec, 2)?;
        let options = rec.fields[1].parse::<u32>().map_err(|_| {
            parse_error(rec.line, 2, format!("option count `{}` is not an integer", rec.fields[1]))
        })?;
        items.push(Item {
            id: rec.fields[0].clone(),
            options,
        });
    }
    ItemBank::new(items)
}

pub fn write_item_bank(bank: &ItemBank) -> String {
    csv_string(
        std::iter::once(vec!["item_id".into(), "options".into()]).chain(
            bank.items()
                .iter()
                .map(|i| vec![i.id.clone(), i.options.to_string()]),
        ),
    )
}

fn header_ids(header: &Record) -> Result<Vec<String>> {
    if header.fields.first().map(String::as_str) != Some("person_id") {
        return Err(parse_error(header.line, 1, "first header field must be `person_id`"));
    }
    Ok(header.fields[1..].to_vec())
}

/// Item ids named in the header of a response file.
pub fn response_item_ids(text: &str) -> Result<Vec<String>> {
    let records = read_records(text, 1)?;
    let header = records
        .first()
        .ok_or_else(|| parse_error(1, 1, "missing header row"))?;
    header_ids(header)
}

/// Reads a response file. Columns are matched to the bank by id; the
/// resulting matrix uses the column order of the file.
pub fn read_responses(text: &str, bank: &ItemBank) -> Result<ResponseMatrix> {
    let records = read_records(text, 1)?;
    let (header, rows) = records
        .split_first()
        .ok_or_else(|| parse_error(1, 1, "missing header row"))?;
    let ids = header_ids(header)?;
    let mut columns = Vec::with_capacity(ids.len());
    for id in &ids {
        columns.push(bank.position(id).ok_or_else(|| Error::UnknownItem(id.clone()))?);
    }
    let items = bank.subset(&columns);
    let mut persons = Vec::with_capacity(rows.len());
    let mut cells = Vec::with_capacity(rows.len() * ids.len());
    for rec in rows {
        check_width(rec, ids.len() + 1)?;
        persons.push(rec.fields[0].clone());
        for (j, code) in rec.fields[1..].iter().enumerate() {
            let outcome = Outcome::from_code(code).ok_or_else(|| {
                parse_error(
                    rec.line,
                    j + 2,
                    format!(
                        "invalid response code `{code}` for person `{}`, item `{}` (expected 1, W or .)",
                        rec.fields[0], ids[j]
                    ),
                )
            })?;
            cells.push(outcome);
        }
    }
    ResponseMatrix::new(persons, items, cells)
}

pub fn write_responses(responses: &ResponseMatrix) -> String {
    let items = responses.items();
    let header = std::iter::once("person_id".to_string())
        .chain(items.items().iter().map(|i| i.id.clone()))
        .collect();
    csv_string(std::iter::once(header).chain((0..responses.n_persons()).map(|i| {
        std::iter::once(responses.persons()[i].clone())
            .chain(responses.row(i).iter().map(|o| o.code().to_string()))
            .collect()
    })))
}

fn preamble(matrix: &ScoredMatrix) -> String {
    let options: Vec<String> = matrix
        .items()
        .items()
        .iter()
        .map(|i| i.options.to_string())
        .collect();
    format!(
        "# kind={} scheme={} options={}\n",
        matrix.kind(),
        matrix.scheme(),
        options.join(";")
    )
}

pub fn write_scored(matrix: &ScoredMatrix) -> String {
    let header = std::iter::once("person_id".to_string())
        .chain(matrix.items().items().iter().map(|i| i.id.clone()))
        .collect();
    let body = csv_string(std::iter::once(header).chain((0..matrix.n_persons()).map(|i| {
        std::iter::once(matrix.persons()[i].clone())
            .chain(matrix.row(i).iter().map(|&v| fmt6(v)))
            .collect()
    })));
    preamble(matrix) + &body
}

fn parse_preamble(line: &str) -> Result<(MatrixKind, Scheme, Vec<u32>)> {
    let rest = line
        .strip_prefix('#')
        .ok_or_else(|| parse_error(1, 1, "missing `# kind=... scheme=... options=...` preamble"))?;
    let (mut kind, mut scheme, mut options) = (None, None, None);
    for token in rest.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| parse_error(1, 1, format!("malformed preamble entry `{token}`")))?;
        match key {
            "kind" => {
                kind = Some(MatrixKind::from_name(value).ok_or_else(|| {
                    parse_error(1, 1, format!("unknown matrix kind `{value}`"))
                })?)
            }
            "scheme" => {
                scheme = Some(Scheme::from_name(value).ok_or_else(|| {
                    parse_error(1, 1, format!("unknown scheme `{value}`"))
                })?)
            }
            "options" => {
                options = Some(
                    value
                        .split(';')
                        .filter(|s| !s.is_empty())
                        .map(|s| {
                            s.parse::<u32>().map_err(|_| {
                                parse_error(1, 1, format!("option count `{s}` is not an integer"))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            _ => return Err(parse_error(1, 1, format!("unknown preamble key `{key}`"))),
        }
    }
    match (kind, scheme, options) {
        (Some(k), Some(s), Some(o)) => Ok((k, s, o)),
        _ => Err(parse_error(1, 1, "preamble needs kind, scheme and options")),
    }
}

/// The admissible value a written cell stands for.
fn snap(value: f64, kind: MatrixKind, scheme: Scheme, options: u32) -> Option<Rational> {
    const TOLERANCE: f64 = 5e-6;
    let mut candidates = vec![Rational::zero(), Rational::one()];
    if kind == MatrixKind::Corrected {
        candidates.push(match scheme {
            Scheme::Punitive => -Rational::one(),
            _ => corrective_element(options),
        });
    }
    candidates
        .into_iter()
        .find(|c| (rational_to_f64(c) - value).abs() <= TOLERANCE)
}

pub fn read_scored(text: &str) -> Result<ScoredMatrix> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let (kind, scheme, options) = parse_preamble(first.trim_end_matches('\r'))?;
    let records = read_records(rest, 2)?;
    let (header, rows) = records
        .split_first()
        .ok_or_else(|| parse_error(2, 1, "missing header row"))?;
    let ids = header_ids(header)?;
    if ids.len() != options.len() {
        return Err(parse_error(
            header.line,
            1,
            format!("{} item columns but {} option counts", ids.len(), options.len()),
        ));
    }
    let items = ItemBank::new(
        ids.iter()
            .zip(&options)
            .map(|(id, &m)| Item {
                id: id.clone(),
                options: m,
            })
            .collect(),
    )?;
    let mut persons = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len() * ids.len());
    for rec in rows {
        check_width(rec, ids.len() + 1)?;
        persons.push(rec.fields[0].clone());
        for (j, field) in rec.fields[1..].iter().enumerate() {
            let v = field
                .parse::<f64>()
                .ok()
                .and_then(|v| snap(v, kind, scheme, options[j]))
                .ok_or_else(|| {
                    parse_error(
                        rec.line,
                        j + 2,
                        format!("value `{field}` is not admissible for a {kind} matrix under scheme {scheme}"),
                    )
                })?;
            values.push(v);
        }
    }
    ScoredMatrix::new(persons, items, values, kind, scheme)
}

/// Person and item scores in long form.
pub fn write_scores(matrix: &ScoredMatrix, scores: &ScoreVector) -> String {
    let header = vec!["side".into(), "id".into(), "score".into()];
    let persons = matrix
        .persons()
        .iter()
        .zip(scores.person_scores_f64())
        .map(|(id, s)| vec!["person".into(), id.clone(), fmt6(s)]);
    let items = matrix
        .items()
        .items()
        .iter()
        .zip(scores.item_scores_f64())
        .map(|(item, s)| vec!["item".into(), item.id.clone(), fmt6(s)]);
    csv_string(std::iter::once(header).chain(persons).chain(items))
}

pub fn write_prune_report(report: &PruneReport) -> String {
    let header = vec!["pass".into(), "axis".into(), "id".into(), "trigger".into()];
    csv_string(std::iter::once(header).chain(report.removals.iter().map(|r| {
        vec![
            r.pass.to_string(),
            r.axis.name().into(),
            r.id.clone(),
            r.trigger.name().into(),
        ]
    })))
}

fn first_reason(stats: &[&Stat]) -> String {
    stats
        .iter()
        .find_map(|s| s.as_ref().err())
        .map(Undefined::to_string)
        .unwrap_or_default()
}

pub fn write_item_stats(stats: &[ItemStats]) -> String {
    let header = [
        "item_id", "p_j", "var_pop", "K_j", "r_raw", "r_corrected", "r_rest", "valid", "reason",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    csv_string(std::iter::once(header).chain(stats.iter().map(|s| {
        vec![
            s.item_id.clone(),
            fmt6(s.p),
            fmt6(s.var_pop),
            fmt_stat(&s.k),
            fmt_stat(&s.r_raw),
            fmt_stat(&s.r_corrected),
            fmt_stat(&s.r_rest),
            s.valid.name().into(),
            first_reason(&[&s.k, &s.r_raw, &s.r_corrected, &s.r_rest]),
        ]
    })))
}

pub fn write_intercorrelations(table: &Intercorrelations) -> String {
    let header = ["item_s", "item_t", "r_raw", "r_scaled", "flag", "reason"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    csv_string(std::iter::once(header).chain(table.pairs().map(|(s, t, e)| {
        vec![
            table.item_ids[s].clone(),
            table.item_ids[t].clone(),
            fmt_stat(&e.raw),
            fmt_stat(&e.scaled),
            if e.out_of_range() { "out-of-range" } else { "" }.into(),
            first_reason(&[&e.raw, &e.scaled]),
        ]
    })))
}

pub fn write_reliability(reports: &[ReliabilityReport]) -> String {
    let header = [
        "method",
        "value",
        "r_halves",
        "r_half_test",
        "r_full_spearman_brown",
        "reason",
        "warning",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    csv_string(std::iter::once(header).chain(reports.iter().map(|r| {
        let (halves, half_test, full) = match &r.halves {
            Some(h) => (
                fmt_stat(&h.r_halves),
                fmt_stat(&h.r_half_test),
                fmt_stat(&h.r_full_spearman_brown),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        vec![
            r.method.name().into(),
            fmt_stat(&r.value),
            halves,
            half_test,
            full,
            first_reason(&[&r.value]),
            r.warning.clone().unwrap_or_default(),
        ]
    })))
}

fn fmt_selectivity(d: Selectivity) -> String {
    match d {
        Selectivity::Finite(v) => fmt6(v),
        Selectivity::Infinite => "inf".into(),
    }
}

/// Person and item parameters: `side,id,potential,selectivity,guessing`.
pub fn write_params(params: &IrtParams, person_ids: &[String], item_ids: &[String]) -> String {
    let header = ["side", "id", "potential", "selectivity", "guessing"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let persons = (0..params.n_persons()).map(|i| {
        vec![
            "person".into(),
            person_ids[i].clone(),
            fmt6(params.theta[i]),
            fmt_selectivity(params.d_person[i]),
            fmt6(params.c_person[i]),
        ]
    });
    let items = (0..params.n_items()).map(|j| {
        vec![
            "item".into(),
            item_ids[j].clone(),
            fmt6(params.delta[j]),
            fmt_selectivity(params.d_item[j]),
            fmt6(params.c_item[j]),
        ]
    });
    csv_string(std::iter::once(header).chain(persons).chain(items))
}

/// One row of a parameter file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamRow {
    pub side: String,
    pub id: String,
    pub potential: f64,
}

/// Reads the side, id and potential columns of a parameter file.
pub fn read_params(text: &str) -> Result<Vec<ParamRow>> {
    let records = read_records(text, 1)?;
    let (header, rows) = records
        .split_first()
        .ok_or_else(|| parse_error(1, 1, "missing header row"))?;
    if header.fields.len() < 3 || header.fields[..3] != ["side", "id", "potential"] {
        return Err(parse_error(header.line, 1, "header must start with `side,id,potential`"));
    }
    rows.iter()
        .map(|rec| {
            check_width(rec, header.fields.len())?;
            let potential = rec.fields[2].parse::<f64>().map_err(|_| {
                parse_error(rec.line, 3, format!("potential `{}` is not a number", rec.fields[2]))
            })?;
            Ok(ParamRow {
                side: rec.fields[0].clone(),
                id: rec.fields[1].clone(),
                potential,
            })
        })
        .collect()
}

pub fn write_diagnostics(d: &FitDiagnostics, person_ids: &[String], item_ids: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model: {}", d.model);
    let _ = writeln!(s, "converged: {}", d.converged);
    let _ = writeln!(s, "iterations: {}", d.iterations);
    let _ = writeln!(s, "log_likelihood: {}", fmt6(d.log_likelihood));
    let _ = writeln!(s, "gradient_norm: {}", fmt6(d.gradient_norm));
    let ids = |idx: &[usize], names: &[String]| {
        idx.iter().map(|&i| names[i].clone()).collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(s, "clamped_persons: {}", ids(&d.clamped_persons, person_ids));
    let _ = writeln!(s, "clamped_items: {}", ids(&d.clamped_items, item_ids));
    let _ = writeln!(s, "extreme_persons: {}", ids(&d.extreme_persons, person_ids));
    let _ = writeln!(s, "extreme_items: {}", ids(&d.extreme_items, item_ids));
    let trace: Vec<String> = d.ll_trace.iter().map(|&v| fmt6(v)).collect();
    let _ = writeln!(s, "ll_trace: {}", trace.join(" "));
    s
}

/// One row per estimator, matrix and replication.
pub fn write_experiment(report: &ExperimentReport) -> String {
    let header = [
        "replication",
        "estimator",
        "matrix",
        "reference",
        "estimate",
        "error",
        "mean_abs_dev",
        "count",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    csv_string(std::iter::once(header).chain(report.rows.iter().map(|r| {
        vec![
            r.replication.to_string(),
            r.estimator.name().into(),
            r.matrix.name().into(),
            fmt6(r.reference),
            fmt6(r.estimate),
            fmt6(r.error()),
            fmt6(r.mean_abs_dev),
            r.count.to_string(),
        ]
    })))
}

pub fn write_summary(report: &ExperimentReport) -> String {
    let header = [
        "estimator",
        "matrix",
        "replications",
        "bias",
        "rmse",
        "mean_abs_dev",
        "se",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    csv_string(std::iter::once(header).chain(report.summary().into_iter().map(|s| {
        vec![
            s.estimator.name().into(),
            s.matrix.name().into(),
            s.replications.to_string(),
            fmt6(s.bias),
            fmt6(s.rmse),
            fmt6(s.mean_abs_dev),
            fmt6(s.se),
        ]
    })))
}

pub fn write_score_checks(report: &ExperimentReport) -> String {
    let header = [
        "replication",
        "mean_true",
        "mean_distorted",
        "mean_corrected",
        "se_corrected",
        "expected_distorted_gap",
        "se_distorted_gap",
        "distorted_dominates",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    csv_string(std::iter::once(header).chain(report.score_checks.iter().map(|c| {
        vec![
            c.replication.to_string(),
            fmt6(c.mean_true),
            fmt6(c.mean_distorted),
            fmt6(c.mean_corrected),
            fmt6(c.se_corrected),
            fmt6(c.expected_distorted_gap),
            fmt6(c.se_distorted_gap),
            c.distorted_dominates.to_string(),
        ]
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::score_matrix;

    const BANK: &str = "item_id,options\nA,4\nB,4\nC,2\n";
    const RESPONSES: &str = "person_id,A,B,C\np1,1,W,.\np2,W,W,1\np3,1,1,W\n";

    fn responses() -> ResponseMatrix {
        read_responses(RESPONSES, &read_item_bank(BANK).unwrap()).unwrap()
    }

    #[test]
    fn corrected_cells_render_with_six_decimals() {
        let scored = score_matrix(&responses(), Scheme::CorrectedElements);
        let text = write_scored(&scored);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# kind=corrected scheme=corrected options=4;4;2"));
        assert_eq!(lines.next(), Some("person_id,A,B,C"));
        assert_eq!(lines.next(), Some("p1,1.000000,-0.333333,0.000000"));
        assert_eq!(lines.next(), Some("p2,-0.333333,-0.333333,1.000000"));
        assert_eq!(lines.next(), Some("p3,1.000000,1.000000,-1.000000"));
    }

    #[test]
    fn ignore_scheme_is_binary() {
        let scored = score_matrix(&responses(), Scheme::Ignore);
        for i in 0..scored.n_persons() {
            assert!(scored.row(i).iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }

    #[test]
    fn scored_round_trip_is_exact() {
        for scheme in [Scheme::Ignore, Scheme::Punitive, Scheme::CorrectedElements] {
            let scored = score_matrix(&responses(), scheme);
            let back = read_scored(&write_scored(&scored)).unwrap();
            assert_eq!(back, scored);
        }
    }

    #[test]
    fn responses_round_trip() {
        let r = responses();
        assert_eq!(write_responses(&r), RESPONSES);
    }

    #[test]
    fn malformed_cell_names_row_and_column() {
        let text = "person_id,A,B,C\np1,1,X,.\n";
        match read_responses(text, &read_item_bank(BANK).unwrap()) {
            Err(Error::Parse { line, column, message }) => {
                assert_eq!((line, column), (2, 3));
                assert!(message.contains("`X`"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_item_is_rejected() {
        let text = "person_id,A,Z\np1,1,1\n";
        assert!(matches!(
            read_responses(text, &read_item_bank(BANK).unwrap()),
            Err(Error::UnknownItem(id)) if id == "Z"
        ));
    }

    #[test]
    fn ragged_row_is_a_parse_error() {
        let text = "person_id,A,B,C\np1,1,W\n";
        assert!(matches!(
            read_responses(text, &read_item_bank(BANK).unwrap()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn inadmissible_scored_value_is_rejected() {
        let text = "# kind=corrected scheme=corrected options=4\nperson_id,A\np1,-0.5\n";
        assert!(matches!(
            read_scored(text),
            Err(Error::Parse { line: 3, column: 2, .. })
        ));
    }

    #[test]
    fn fmt6_avoids_negative_zero() {
        assert_eq!(fmt6(-1e-12), "0.000000");
        assert_eq!(fmt6(f64::NAN), "NA");
        assert_eq!(fmt6(-1.0 / 3.0), "-0.333333");
    }

    #[test]
    fn params_round_trip_potentials() {
        let p = IrtParams::rasch(vec![0.5, -0.5], vec![1.25]);
        let text = write_params(&p, &["a".into(), "b".into()], &["i".into()]);
        let rows = read_params(&text).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].side, "item");
        assert_eq!(rows[2].potential, 1.25);
    }
}
