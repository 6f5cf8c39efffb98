//! CSV parsing and export of weekly flow records.

use std::io::{Read, Write};

use chrono::NaiveDate;
use csv::{ReaderBuilder, Trim, WriterBuilder};

use super::{FlowRecord, IngestError};

/// Maps logical fields onto named columns of a delimited file.
///
/// The default matches the public weekly state-scale layout: identifiers
/// `geoid_o`/`geoid_d`, a `date_range` column whose start date identifies
/// the week, and a `visitor_flows` column.
#[derive(Debug, Clone)]
pub struct ColumnMap {
    pub origin: String,
    pub dest: String,
    pub date: String,
    pub flow: String,
    pub pop_origin: Option<String>,
    pub num_devices: Option<String>,
    pub delimiter: u8,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            origin: "geoid_o".to_string(),
            dest: "geoid_d".to_string(),
            date: "date_range".to_string(),
            flow: "visitor_flows".to_string(),
            pop_origin: None,
            num_devices: None,
            delimiter: b',',
        }
    }
}

/// Parses the start date out of a date or date-range field.
///
/// Accepted forms: `2019-01-07`, `2019-01-07 - 2019-01-13`,
/// `01/07/19 - 01/13/19`, and the same with `/`-style dates.
fn parse_week_start(field: &str) -> Option<NaiveDate> {
    let token = field.split_whitespace().next()?;
    for format in ["%Y-%m-%d", "%m/%d/%y", "%m/%d/%Y"] {
        if let Ok(d) = NaiveDate::parse_from_str(token, format) {
            return Some(d);
        }
    }
    None
}

fn required_column(headers: &csv::StringRecord, name: &str) -> Result<usize, IngestError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
}

/// Parses one delimited file into flow records.
///
/// The first bad row aborts the parse with a row-numbered error; rows are
/// numbered like file lines, with the header as row 1.
pub fn parse_flow_csv<R: Read>(source: R, map: &ColumnMap) -> Result<Vec<FlowRecord>, IngestError> {
    let mut reader = ReaderBuilder::new()
        .delimiter(map.delimiter)
        .has_headers(true)
        .trim(Trim::All)
        .flexible(false)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let origin_col = required_column(&headers, &map.origin)?;
    let dest_col = required_column(&headers, &map.dest)?;
    let date_col = required_column(&headers, &map.date)?;
    let flow_col = required_column(&headers, &map.flow)?;
    let pop_col = map
        .pop_origin
        .as_deref()
        .map(|name| required_column(&headers, name))
        .transpose()?;
    let devices_col = map
        .num_devices
        .as_deref()
        .map(|name| required_column(&headers, name))
        .transpose()?;

    let parse_optional = |row: u64,
                          record: &csv::StringRecord,
                          col: Option<usize>,
                          name: &str|
     -> Result<Option<f64>, IngestError> {
        match col {
            None => Ok(None),
            Some(c) => {
                let raw = record.get(c).unwrap_or("");
                if raw.is_empty() {
                    return Ok(None);
                }
                let value: f64 = raw.parse().map_err(|_| IngestError::BadNumeric {
                    row,
                    column: name.to_string(),
                    value: raw.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(IngestError::BadNumeric {
                        row,
                        column: name.to_string(),
                        value: raw.to_string(),
                    });
                }
                Ok(Some(value))
            }
        }
    };

    let mut records = Vec::new();
    for (i, row_result) in reader.records().enumerate() {
        let row = i as u64 + 2; // header is row 1
        let record = row_result?;

        let raw_flow = record.get(flow_col).unwrap_or("");
        let visitor_flow: f64 = raw_flow.parse().map_err(|_| IngestError::BadNumeric {
            row,
            column: map.flow.clone(),
            value: raw_flow.to_string(),
        })?;
        if !visitor_flow.is_finite() {
            return Err(IngestError::BadNumeric {
                row,
                column: map.flow.clone(),
                value: raw_flow.to_string(),
            });
        }
        if visitor_flow < 0.0 {
            return Err(IngestError::NegativeFlow { row, value: visitor_flow });
        }

        let raw_date = record.get(date_col).unwrap_or("");
        let week_start = parse_week_start(raw_date)
            .ok_or_else(|| IngestError::BadDate { row, value: raw_date.to_string() })?;

        let pop_origin = parse_optional(row, &record, pop_col, map.pop_origin.as_deref().unwrap_or(""))?;
        let num_devices_origin =
            parse_optional(row, &record, devices_col, map.num_devices.as_deref().unwrap_or(""))?;
        if pop_origin.is_some() && num_devices_origin.is_none() {
            return Err(IngestError::BadRecord {
                row,
                message: "pop_origin present without num_devices_origin".to_string(),
            });
        }

        records.push(FlowRecord {
            origin_id: record.get(origin_col).unwrap_or("").to_string(),
            dest_id: record.get(dest_col).unwrap_or("").to_string(),
            week_start,
            visitor_flow,
            pop_origin,
            num_devices_origin,
        });
    }
    Ok(records)
}

/// Writes records back out in the mapped column layout. Parsing the
/// output with the same map reproduces the records exactly.
pub fn export_flow_csv<W: Write>(
    records: &[FlowRecord],
    map: &ColumnMap,
    sink: W,
) -> Result<(), IngestError> {
    let mut writer = WriterBuilder::new().delimiter(map.delimiter).from_writer(sink);
    let mut header = vec![map.origin.clone(), map.dest.clone(), map.date.clone(), map.flow.clone()];
    let with_pop = map.pop_origin.is_some() && map.num_devices.is_some();
    if with_pop {
        header.push(map.pop_origin.clone().unwrap());
        header.push(map.num_devices.clone().unwrap());
    }
    writer.write_record(&header)?;
    for record in records {
        let mut row = vec![
            record.origin_id.clone(),
            record.dest_id.clone(),
            record.week_start.format("%Y-%m-%d").to_string(),
            format!("{}", record.visitor_flow),
        ];
        if with_pop {
            row.push(record.pop_origin.map(|v| format!("{v}")).unwrap_or_default());
            row.push(record.num_devices_origin.map(|v| format!("{v}")).unwrap_or_default());
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
