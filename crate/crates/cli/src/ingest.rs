//! Reading and writing vote tables in long CSV form, one row per
//! (municipality, question).

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use bloc_core::{Municipality, Question, VoteCount, VoteTable};

use crate::error::{CliError, CliResult};

/// Header names for each field of the input format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub municipality_id: String,
    pub municipality_name: String,
    pub question_id: String,
    pub year: String,
    pub yes: String,
    pub no: String,
    pub lat: String,
    pub lon: String,
    pub label: String,
    pub tag: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            municipality_id: "municipality_id".into(),
            municipality_name: "municipality_name".into(),
            question_id: "question_id".into(),
            year: "year".into(),
            yes: "yes".into(),
            no: "no".into(),
            lat: "lat".into(),
            lon: "lon".into(),
            label: "label".into(),
            tag: "tag".into(),
        }
    }
}

impl ColumnMap {
    /// Parses overrides of the form `field=Header,field=Header`.
    pub fn parse(spec: &str) -> CliResult<Self> {
        let mut map = Self::default();
        for pair in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (field, header) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("column mapping `{pair}` is not field=header")))?;
            let slot = match field.trim() {
                "municipality_id" => &mut map.municipality_id,
                "municipality_name" => &mut map.municipality_name,
                "question_id" => &mut map.question_id,
                "year" => &mut map.year,
                "yes" => &mut map.yes,
                "no" => &mut map.no,
                "lat" => &mut map.lat,
                "lon" => &mut map.lon,
                "label" => &mut map.label,
                "tag" => &mut map.tag,
                other => return Err(CliError::Usage(format!("unknown column field `{other}`"))),
            };
            *slot = header.trim().to_string();
        }
        Ok(map)
    }
}

/// What ingestion discarded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    /// `(line, municipality id, question id)` of rows with no votes.
    pub dropped_rows: Vec<(u64, String, String)>,
    /// Municipalities lacking at least one question.
    pub excluded: Vec<String>,
}

struct Columns {
    mid: usize,
    name: usize,
    qid: usize,
    year: usize,
    yes: usize,
    no: usize,
    lat: Option<usize>,
    lon: Option<usize>,
    label: Option<usize>,
    tag: Option<usize>,
}

fn locate(headers: &csv::StringRecord, map: &ColumnMap) -> CliResult<Columns> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let need = |name: &str| find(name).ok_or_else(|| CliError::Data(format!("missing required column `{name}`")));
    Ok(Columns {
        mid: need(&map.municipality_id)?,
        name: need(&map.municipality_name)?,
        qid: need(&map.question_id)?,
        year: need(&map.year)?,
        yes: need(&map.yes)?,
        no: need(&map.no)?,
        lat: find(&map.lat),
        lon: find(&map.lon),
        label: find(&map.label),
        tag: find(&map.tag),
    })
}

fn field<'a>(rec: &'a csv::StringRecord, idx: usize, line: u64, what: &str) -> CliResult<&'a str> {
    rec.get(idx)
        .map(str::trim)
        .ok_or_else(|| CliError::Data(format!("row {line}: missing `{what}` field")))
}

fn count(rec: &csv::StringRecord, idx: usize, line: u64, what: &str) -> CliResult<u32> {
    let raw = field(rec, idx, line, what)?;
    let v: i64 = raw
        .parse()
        .map_err(|_| CliError::Data(format!("row {line}: `{what}` value `{raw}` is not an integer")))?;
    if v < 0 {
        return Err(CliError::Data(format!("row {line}: negative `{what}` count {v}")));
    }
    u32::try_from(v).map_err(|_| CliError::Data(format!("row {line}: `{what}` count {v} is too large")))
}

fn coordinate(rec: &csv::StringRecord, idx: Option<usize>, line: u64, what: &str) -> CliResult<Option<f64>> {
    let Some(idx) = idx else { return Ok(None) };
    let raw = rec.get(idx).map(str::trim).unwrap_or("");
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Some)
        .ok_or_else(|| CliError::Data(format!("row {line}: `{what}` value `{raw}` is not a number")))
}

fn optional_text(rec: &csv::StringRecord, idx: Option<usize>) -> String {
    idx.and_then(|i| rec.get(i)).map(|s| s.trim().to_string()).unwrap_or_default()
}

/// Reads a vote table from any CSV source.
pub fn ingest_reader<R: Read>(reader: R, map: &ColumnMap) -> CliResult<(VoteTable, IngestReport)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("cannot read header: {e}")))?
        .clone();
    let cols = locate(&headers, map)?;
    let mut municipalities: Vec<Municipality> = Vec::new();
    let mut m_index: HashMap<String, usize> = HashMap::new();
    let mut questions: Vec<Question> = Vec::new();
    let mut q_index: HashMap<String, (usize, u64)> = HashMap::new();
    let mut cells: HashMap<(usize, usize), (u64, VoteCount)> = HashMap::new();
    let mut report = IngestReport::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Data(format!("malformed CSV: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mid = field(&rec, cols.mid, line, &map.municipality_id)?;
        let qid = field(&rec, cols.qid, line, &map.question_id)?;
        if mid.is_empty() || qid.is_empty() {
            return Err(CliError::Data(format!("row {line}: empty municipality or question id")));
        }
        let year_raw = field(&rec, cols.year, line, &map.year)?;
        let year: i32 = year_raw
            .parse()
            .map_err(|_| CliError::Data(format!("row {line}: year `{year_raw}` is not an integer")))?;
        let yes = count(&rec, cols.yes, line, &map.yes)?;
        let no = count(&rec, cols.no, line, &map.no)?;
        let lat = coordinate(&rec, cols.lat, line, &map.lat)?;
        let lon = coordinate(&rec, cols.lon, line, &map.lon)?;
        let mi = *m_index.entry(mid.to_string()).or_insert_with(|| {
            let mut m = Municipality::new(mid, field(&rec, cols.name, line, "name").unwrap_or(""));
            m.latitude = lat;
            m.longitude = lon;
            municipalities.push(m);
            municipalities.len() - 1
        });
        let qi = match q_index.get(qid) {
            Some(&(qi, first)) => {
                if questions[qi].year != year {
                    return Err(CliError::Data(format!(
                        "rows {first} and {line}: question `{qid}` has years {} and {year}",
                        questions[qi].year
                    )));
                }
                qi
            }
            None => {
                let mut q = Question::new(qid, year);
                q.label = optional_text(&rec, cols.label);
                q.tag = optional_text(&rec, cols.tag);
                questions.push(q);
                q_index.insert(qid.to_string(), (questions.len() - 1, line));
                questions.len() - 1
            }
        };
        if let Some((first, _)) = cells.get(&(mi, qi)) {
            return Err(CliError::Data(format!(
                "rows {first} and {line}: duplicate entry for municipality `{mid}` and question `{qid}`"
            )));
        }
        cells.insert((mi, qi), (line, VoteCount::new(yes, no)));
    }
    if municipalities.is_empty() || questions.is_empty() {
        return Err(CliError::Data("input holds no vote rows".into()));
    }
    let mut dropped: Vec<(u64, String, String)> = cells
        .iter()
        .filter(|(_, (_, c))| c.total() == 0)
        .map(|(&(mi, qi), &(line, _))| (line, municipalities[mi].id.clone(), questions[qi].id.clone()))
        .collect();
    dropped.sort();
    if !dropped.is_empty() {
        let list: Vec<String> = dropped.iter().map(|(l, m, q)| format!("row {l} ({m}, {q})")).collect();
        log::warn!("dropped {} rows with no votes: {}", dropped.len(), list.join("; "));
    }
    cells.retain(|_, (_, c)| c.total() > 0);
    report.dropped_rows = dropped;
    let nq = questions.len();
    let keep: Vec<usize> = (0..municipalities.len())
        .filter(|&mi| (0..nq).all(|qi| cells.contains_key(&(mi, qi))))
        .collect();
    report.excluded = (0..municipalities.len())
        .filter(|mi| !keep.contains(mi))
        .map(|mi| municipalities[mi].id.clone())
        .collect();
    if !report.excluded.is_empty() {
        log::warn!(
            "excluded {} municipalities missing at least one question: {}",
            report.excluded.len(),
            report.excluded.join(", ")
        );
    }
    if keep.is_empty() {
        return Err(CliError::Data("no municipality has votes on every question".into()));
    }
    let mut counts = Vec::with_capacity(keep.len() * nq);
    for &mi in &keep {
        for qi in 0..nq {
            counts.push(cells[&(mi, qi)].1);
        }
    }
    let kept: Vec<Municipality> = keep.iter().map(|&mi| municipalities[mi].clone()).collect();
    let table = VoteTable::new(kept, questions, counts)?;
    Ok((table, report))
}

/// Reads a vote table from a CSV file.
pub fn ingest(path: &Path, map: &ColumnMap) -> CliResult<(VoteTable, IngestReport)> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    ingest_reader(std::io::BufReader::new(file), map)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes every cell of `table` in the default column layout.
pub fn write_table<W: Write>(table: &VoteTable, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "municipality_id",
        "municipality_name",
        "question_id",
        "year",
        "yes",
        "no",
        "lat",
        "lon",
        "label",
        "tag",
    ])?;
    for (i, m) in table.municipalities().iter().enumerate() {
        for (q, question) in table.questions().iter().enumerate() {
            let c = table.cell(i, q);
            w.write_record([
                m.id.as_str(),
                m.name.as_str(),
                question.id.as_str(),
                &question.year.to_string(),
                &c.yes.to_string(),
                &c.no.to_string(),
                &opt(m.latitude),
                &opt(m.longitude),
                question.label.as_str(),
                question.tag.as_str(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
