//! CSV tables: readers and writers with a fixed header row each.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use csv::StringRecord;

use super::{check_odometer_monotone, fmt_decimal, format_err, io_err, IngestError};
use crate::model::{
    DeviceClass, DeviceId, DeviceSighting, DeviceTrip, LocalizationRecord, NetworkModel,
    OdMatrix, StopId, StopInfo, StopVisit, TicketValidation, Timestamp,
};
use crate::stops::RunWindow;
use crate::Coord;

const LAT_LON_DP: usize = 6;
const METERS_DP: usize = 3;

fn open_reader(path: &Path) -> Result<csv::Reader<File>, IngestError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new().from_reader(file))
}

fn check_header(
    rdr: &mut csv::Reader<impl Read>,
    path: &Path,
    expected: &[&str],
) -> Result<(), IngestError> {
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(format_err(
            path,
            1,
            format!("expected header {:?}, found {:?}", expected.join(","), headers),
        ));
    }
    Ok(())
}

fn csv_err(path: &Path, err: csv::Error) -> IngestError {
    let line = err.position().map_or(0, csv::Position::line);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => io_err(path, e),
        other => format_err(path, line, format!("{other:?}")),
    }
}

fn record_line(record: &StringRecord) -> u64 {
    record.position().map_or(0, csv::Position::line)
}

fn field<'r>(
    record: &'r StringRecord,
    idx: usize,
    path: &Path,
) -> Result<&'r str, IngestError> {
    record
        .get(idx)
        .ok_or_else(|| format_err(path, record_line(record), format!("missing field {idx}")))
}

fn parse_with<T>(
    raw: &str,
    path: &Path,
    line: u64,
    parse: impl FnOnce(&str) -> Result<T, String>,
) -> Result<T, IngestError> {
    parse(raw).map_err(|message| format_err(path, line, message))
}

fn parse_timestamp(raw: &str, path: &Path, line: u64) -> Result<Timestamp, IngestError> {
    parse_with(raw, path, line, |s| Timestamp::parse(s).map_err(|e| e.to_string()))
}

fn parse_f64(raw: &str, what: &str, path: &Path, line: u64) -> Result<Coord, IngestError> {
    parse_with(raw, path, line, |s| {
        s.parse::<Coord>().map_err(|_| format!("bad {what} {s:?}"))
    })
}

fn parse_u64(raw: &str, what: &str, path: &Path, line: u64) -> Result<u64, IngestError> {
    parse_with(raw, path, line, |s| {
        s.parse::<u64>().map_err(|_| format!("bad {what} {s:?}"))
    })
}

fn parse_bool(raw: &str, what: &str, path: &Path, line: u64) -> Result<bool, IngestError> {
    match raw {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format_err(path, line, format!("bad {what} {other:?}"))),
    }
}

fn new_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, IngestError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish_writer(
    mut wtr: csv::Writer<BufWriter<File>>,
    path: &Path,
) -> Result<(), IngestError> {
    wtr.flush().map_err(|e| io_err(path, e))
}

fn write_row(
    wtr: &mut csv::Writer<BufWriter<File>>,
    path: &Path,
    row: &[&str],
) -> Result<(), IngestError> {
    wtr.write_record(row).map_err(|e| csv_err(path, e))
}

// ---------------------------------------------------------------------------
// sightings.csv: at,device,class

pub fn load_sightings(path: &Path) -> Result<Vec<DeviceSighting>, IngestError> {
    let mut rdr = open_reader(path)?;
    check_header(&mut rdr, path, &["at", "device", "class"])?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let at = parse_timestamp(field(&record, 0, path)?, path, line)?;
        let device = parse_with(field(&record, 1, path)?, path, line, |s| {
            DeviceId::new(s).map_err(|e| e.to_string())
        })?;
        let class = parse_with(field(&record, 2, path)?, path, line, |s| {
            DeviceClass::new(s).map_err(|e| e.to_string())
        })?;
        out.push(DeviceSighting { device, class, at });
    }
    out.sort();
    Ok(out)
}

pub fn write_sightings(sightings: &[DeviceSighting], path: &Path) -> Result<(), IngestError> {
    let mut wtr = new_writer(path)?;
    write_row(&mut wtr, path, &["at", "device", "class"])?;
    for s in sightings {
        write_row(&mut wtr, path, &[&s.at.format(), s.device.as_str(), s.class.as_str()])?;
    }
    finish_writer(wtr, path)
}

// ---------------------------------------------------------------------------
// localization.csv: at,lat,lon,odometer_m,doors_open,in_service,route_id,run_id

pub fn load_localization(path: &Path) -> Result<Vec<LocalizationRecord>, IngestError> {
    let mut rdr = open_reader(path)?;
    check_header(
        &mut rdr,
        path,
        &["at", "lat", "lon", "odometer_m", "doors_open", "in_service", "route_id", "run_id"],
    )?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let at = parse_timestamp(field(&record, 0, path)?, path, line)?;
        let lat = parse_f64(field(&record, 1, path)?, "latitude", path, line)?;
        let lon = parse_f64(field(&record, 2, path)?, "longitude", path, line)?;
        let odometer = parse_f64(field(&record, 3, path)?, "odometer", path, line)?;
        let doors = parse_bool(field(&record, 4, path)?, "doors_open", path, line)?;
        let in_service = parse_bool(field(&record, 5, path)?, "in_service", path, line)?;
        let route_id = field(&record, 6, path)?.to_owned();
        let run_id = field(&record, 7, path)?.to_owned();
        let rec = LocalizationRecord::new(at, lat, lon, odometer, doors, in_service, route_id, run_id)
            .map_err(|e| format_err(path, line, e.to_string()))?;
        out.push(rec);
    }
    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    check_odometer_monotone(&out)?;
    Ok(out)
}

pub fn write_localization(
    records: &[LocalizationRecord],
    path: &Path,
) -> Result<(), IngestError> {
    let mut wtr = new_writer(path)?;
    write_row(
        &mut wtr,
        path,
        &["at", "lat", "lon", "odometer_m", "doors_open", "in_service", "route_id", "run_id"],
    )?;
    for r in records {
        write_row(
            &mut wtr,
            path,
            &[
                &r.at().format(),
                &fmt_decimal(r.lat(), LAT_LON_DP),
                &fmt_decimal(r.lon(), LAT_LON_DP),
                &fmt_decimal(r.odometer_m(), METERS_DP),
                if r.doors_open() { "true" } else { "false" },
                if r.in_service() { "true" } else { "false" },
                r.route_id(),
                r.run_id(),
            ],
        )?;
    }
    finish_writer(wtr, path)
}

// ---------------------------------------------------------------------------
// tickets.csv: at,ticket_type

pub fn load_tickets(path: &Path) -> Result<Vec<TicketValidation>, IngestError> {
    let mut rdr = open_reader(path)?;
    check_header(&mut rdr, path, &["at", "ticket_type"])?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let at = parse_timestamp(field(&record, 0, path)?, path, line)?;
        let ticket = TicketValidation::new(at, field(&record, 1, path)?.to_owned())
            .map_err(|e| format_err(path, line, e.to_string()))?;
        out.push(ticket);
    }
    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(out)
}

pub fn write_tickets(tickets: &[TicketValidation], path: &Path) -> Result<(), IngestError> {
    let mut wtr = new_writer(path)?;
    write_row(&mut wtr, path, &["at", "ticket_type"])?;
    for t in tickets {
        write_row(&mut wtr, path, &[&t.at().format(), t.ticket_type()])?;
    }
    finish_writer(wtr, path)
}

// ---------------------------------------------------------------------------
// stops.csv: stop_id,name,lat,lon
// routes.csv: route_id,seq,stop_id

pub fn load_network(stops_path: &Path, routes_path: &Path) -> Result<NetworkModel, IngestError> {
    let mut rdr = open_reader(stops_path)?;
    check_header(&mut rdr, stops_path, &["stop_id", "name", "lat", "lon"])?;
    let mut stops = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(stops_path, e))?;
        let line = record_line(&record);
        let id = parse_with(field(&record, 0, stops_path)?, stops_path, line, |s| {
            StopId::new(s).map_err(|e| e.to_string())
        })?;
        let name = field(&record, 1, stops_path)?.to_owned();
        let lat = parse_f64(field(&record, 2, stops_path)?, "latitude", stops_path, line)?;
        let lon = parse_f64(field(&record, 3, stops_path)?, "longitude", stops_path, line)?;
        if stops.insert(id.clone(), StopInfo { name, lat, lon }).is_some() {
            return Err(format_err(stops_path, line, format!("duplicate stop {id}")));
        }
    }

    let mut rdr = open_reader(routes_path)?;
    check_header(&mut rdr, routes_path, &["route_id", "seq", "stop_id"])?;
    // route -> seq -> stop, plus the first line of each route for messages
    let mut staged: BTreeMap<String, (u64, BTreeMap<u64, StopId>)> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(routes_path, e))?;
        let line = record_line(&record);
        let route_id = field(&record, 0, routes_path)?.to_owned();
        let seq = parse_u64(field(&record, 1, routes_path)?, "seq", routes_path, line)?;
        let stop = parse_with(field(&record, 2, routes_path)?, routes_path, line, |s| {
            StopId::new(s).map_err(|e| e.to_string())
        })?;
        if !stops.contains_key(&stop) {
            return Err(IngestError::UnknownStop {
                path: routes_path.display().to_string(),
                route_id,
                stop_id: stop.as_str().to_owned(),
            });
        }
        let entry = staged.entry(route_id.clone()).or_insert_with(|| (line, BTreeMap::new()));
        if entry.1.insert(seq, stop).is_some() {
            return Err(format_err(
                routes_path,
                line,
                format!("duplicate seq {seq} in route {route_id}"),
            ));
        }
    }
    let mut routes = BTreeMap::new();
    let mut first_lines = BTreeMap::new();
    for (route_id, (line, by_seq)) in staged {
        first_lines.insert(route_id.clone(), line);
        routes.insert(route_id, by_seq.into_values().collect::<Vec<_>>());
    }
    NetworkModel::new(stops, routes).map_err(|e| {
        // every remaining violation is attributable to some route's rows
        let line = first_lines.values().copied().next().unwrap_or(0);
        format_err(routes_path, line, e.to_string())
    })
}

pub fn write_network(
    network: &NetworkModel,
    stops_path: &Path,
    routes_path: &Path,
) -> Result<(), IngestError> {
    let mut wtr = new_writer(stops_path)?;
    write_row(&mut wtr, stops_path, &["stop_id", "name", "lat", "lon"])?;
    for (id, info) in network.stops() {
        write_row(
            &mut wtr,
            stops_path,
            &[
                id.as_str(),
                &info.name,
                &fmt_decimal(info.lat, LAT_LON_DP),
                &fmt_decimal(info.lon, LAT_LON_DP),
            ],
        )?;
    }
    finish_writer(wtr, stops_path)?;

    let mut wtr = new_writer(routes_path)?;
    write_row(&mut wtr, routes_path, &["route_id", "seq", "stop_id"])?;
    for (route_id, stops) in network.routes() {
        for (seq, stop) in stops.iter().enumerate() {
            write_row(&mut wtr, routes_path, &[route_id, &seq.to_string(), stop.as_str()])?;
        }
    }
    finish_writer(wtr, routes_path)
}

// ---------------------------------------------------------------------------
// trips.csv: device,first_seen,last_seen,sighting_count

pub fn load_trips(path: &Path) -> Result<Vec<DeviceTrip>, IngestError> {
    let mut rdr = open_reader(path)?;
    check_header(&mut rdr, path, &["device", "first_seen", "last_seen", "sighting_count"])?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let device = parse_with(field(&record, 0, path)?, path, line, |s| {
            DeviceId::new(s).map_err(|e| e.to_string())
        })?;
        let first = parse_timestamp(field(&record, 1, path)?, path, line)?;
        let last = parse_timestamp(field(&record, 2, path)?, path, line)?;
        let count = parse_u64(field(&record, 3, path)?, "sighting_count", path, line)?;
        let trip = DeviceTrip::new(device, first, last, count)
            .map_err(|e| format_err(path, line, e.to_string()))?;
        out.push(trip);
    }
    out.sort_by(|a, b| {
        (a.device(), a.first_seen(), a.last_seen()).cmp(&(b.device(), b.first_seen(), b.last_seen()))
    });
    Ok(out)
}

pub fn write_trips(trips: &[DeviceTrip], path: &Path) -> Result<(), IngestError> {
    let mut wtr = new_writer(path)?;
    write_row(&mut wtr, path, &["device", "first_seen", "last_seen", "sighting_count"])?;
    for t in trips {
        write_row(
            &mut wtr,
            path,
            &[
                t.device().as_str(),
                &t.first_seen().format(),
                &t.last_seen().format(),
                &t.sighting_count().to_string(),
            ],
        )?;
    }
    finish_writer(wtr, path)
}

// ---------------------------------------------------------------------------
// visits.csv: run_id,route_id,stop_id,door_open_at,door_close_at,sequence_index

pub fn load_visits(path: &Path) -> Result<Vec<StopVisit>, IngestError> {
    let mut rdr = open_reader(path)?;
    check_header(
        &mut rdr,
        path,
        &["run_id", "route_id", "stop_id", "door_open_at", "door_close_at", "sequence_index"],
    )?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let run_id = field(&record, 0, path)?.to_owned();
        let route_id = field(&record, 1, path)?.to_owned();
        let stop = parse_with(field(&record, 2, path)?, path, line, |s| {
            StopId::new(s).map_err(|e| e.to_string())
        })?;
        let open = parse_timestamp(field(&record, 3, path)?, path, line)?;
        let close = parse_timestamp(field(&record, 4, path)?, path, line)?;
        let seq = parse_u64(field(&record, 5, path)?, "sequence_index", path, line)? as usize;
        let visit = StopVisit::new(run_id, route_id, stop, open, close, seq)
            .map_err(|e| format_err(path, line, e.to_string()))?;
        out.push(visit);
    }
    out.sort_by(|a, b| {
        (a.run_id(), a.door_open_at(), a.sequence_index())
            .cmp(&(b.run_id(), b.door_open_at(), b.sequence_index()))
    });
    Ok(out)
}

pub fn write_visits(visits: &[StopVisit], path: &Path) -> Result<(), IngestError> {
    let mut wtr = new_writer(path)?;
    write_row(
        &mut wtr,
        path,
        &["run_id", "route_id", "stop_id", "door_open_at", "door_close_at", "sequence_index"],
    )?;
    for v in visits {
        write_row(
            &mut wtr,
            path,
            &[
                v.run_id(),
                v.route_id(),
                v.stop().as_str(),
                &v.door_open_at().format(),
                &v.door_close_at().format(),
                &v.sequence_index().to_string(),
            ],
        )?;
    }
    finish_writer(wtr, path)
}

// ---------------------------------------------------------------------------
// runs.csv: run_id,route_id,service_start,service_end

pub fn load_runs(path: &Path) -> Result<Vec<RunWindow>, IngestError> {
    let mut rdr = open_reader(path)?;
    check_header(&mut rdr, path, &["run_id", "route_id", "service_start", "service_end"])?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record);
        let run_id = field(&record, 0, path)?.to_owned();
        let route_id = field(&record, 1, path)?.to_owned();
        let start = parse_timestamp(field(&record, 2, path)?, path, line)?;
        let end = parse_timestamp(field(&record, 3, path)?, path, line)?;
        let run = RunWindow::new(run_id, route_id, start, end)
            .map_err(|e| format_err(path, line, e.to_string()))?;
        out.push(run);
    }
    out.sort_by(|a, b| {
        (a.run_id(), a.service_start()).cmp(&(b.run_id(), b.service_start()))
    });
    Ok(out)
}

pub fn write_runs(runs: &[RunWindow], path: &Path) -> Result<(), IngestError> {
    let mut wtr = new_writer(path)?;
    write_row(&mut wtr, path, &["run_id", "route_id", "service_start", "service_end"])?;
    for r in runs {
        write_row(
            &mut wtr,
            path,
            &[
                r.run_id(),
                r.route_id(),
                &r.service_start().format(),
                &r.service_end().format(),
            ],
        )?;
    }
    finish_writer(wtr, path)
}

// ---------------------------------------------------------------------------
// od.csv: comment lines with the filter and total, then origin,destination,count

pub fn write_od_matrix(matrix: &OdMatrix, path: &Path) -> Result<(), IngestError> {
    let mut file = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    writeln!(file, "# filter: {}", matrix.filter_descriptor()).map_err(|e| io_err(path, e))?;
    writeln!(file, "# total_journeys: {}", matrix.total_journeys())
        .map_err(|e| io_err(path, e))?;
    let mut wtr = csv::Writer::from_writer(file);
    wtr.write_record(["origin", "destination", "count"]).map_err(|e| csv_err(path, e))?;
    for ((origin, destination), count) in matrix.cells() {
        wtr.write_record([origin.as_str(), destination.as_str(), &count.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    wtr.flush().map_err(|e| io_err(path, e))
}

pub fn load_od_matrix(path: &Path) -> Result<OdMatrix, IngestError> {
    let mut raw = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut raw))
        .map_err(|e| io_err(path, e))?;

    let mut lines = raw.lines();
    let filter_line = lines.next().unwrap_or_default();
    let descriptor = filter_line
        .strip_prefix("# filter: ")
        .or_else(|| filter_line.strip_prefix("# filter:"))
        .ok_or_else(|| format_err(path, 1, "missing '# filter:' comment"))?
        .to_owned();
    let total: u64 = lines
        .next()
        .unwrap_or_default()
        .strip_prefix("# total_journeys: ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format_err(path, 2, "missing '# total_journeys:' comment"))?;

    let body: String = lines.collect::<Vec<_>>().join("\n");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    check_header(&mut rdr, path, &["origin", "destination", "count"])?;
    let mut cells = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record_line(&record) + 2; // the two comment lines
        let origin = parse_with(field(&record, 0, path)?, path, line, |s| {
            StopId::new(s).map_err(|e| e.to_string())
        })?;
        let destination = parse_with(field(&record, 1, path)?, path, line, |s| {
            StopId::new(s).map_err(|e| e.to_string())
        })?;
        let count = parse_u64(field(&record, 2, path)?, "count", path, line)?;
        if cells.insert((origin, destination), count).is_some() {
            return Err(format_err(path, line, "duplicate origin/destination cell"));
        }
    }
    OdMatrix::from_parts(cells, descriptor, total).map_err(|e| format_err(path, 1, e.to_string()))
}

// ---------------------------------------------------------------------------
// analytics outputs (write-only; they feed plots, not later stages)

/// occupancy.csv: hour,value
pub fn write_occupancy(values: &[f64; 24], path: &Path) -> Result<(), IngestError> {
    let mut wtr = new_writer(path)?;
    write_row(&mut wtr, path, &["hour", "value"])?;
    for (hour, value) in values.iter().enumerate() {
        write_row(&mut wtr, path, &[&hour.to_string(), &fmt_decimal(*value, 6)])?;
    }
    finish_writer(wtr, path)
}

/// durations.csv: bucket_start_s,count
pub fn write_durations(
    bucket_width_s: u64,
    counts: &[u64],
    path: &Path,
) -> Result<(), IngestError> {
    let mut wtr = new_writer(path)?;
    write_row(&mut wtr, path, &["bucket_start_s", "count"])?;
    for (i, count) in counts.iter().enumerate() {
        let start = i as u64 * bucket_width_s;
        write_row(&mut wtr, path, &[&start.to_string(), &count.to_string()])?;
    }
    finish_writer(wtr, path)
}

/// tickets_report.csv: hour,device_trips,tickets
pub fn write_tickets_report(
    hours: &[Timestamp],
    pairs: &[(u64, u64)],
    path: &Path,
) -> Result<(), IngestError> {
    let mut wtr = new_writer(path)?;
    write_row(&mut wtr, path, &["hour", "device_trips", "tickets"])?;
    for (hour, (trips, tickets)) in hours.iter().zip(pairs) {
        write_row(
            &mut wtr,
            path,
            &[&hour.format(), &trips.to_string(), &tickets.to_string()],
        )?;
    }
    finish_writer(wtr, path)
}

/// cotravel.csv: device_a,device_b,encounters
pub fn write_cotravel_pairs(
    pairs: &BTreeMap<(DeviceId, DeviceId), u64>,
    path: &Path,
) -> Result<(), IngestError> {
    let mut wtr = new_writer(path)?;
    write_row(&mut wtr, path, &["device_a", "device_b", "encounters"])?;
    for ((a, b), count) in pairs {
        write_row(&mut wtr, path, &[a.as_str(), b.as_str(), &count.to_string()])?;
    }
    finish_writer(wtr, path)
}

/// groups.txt: one co-travel group per line, members space-separated
pub fn write_groups(groups: &[Vec<DeviceId>], path: &Path) -> Result<(), IngestError> {
    let mut file = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    for group in groups {
        let members: Vec<&str> = group.iter().map(DeviceId::as_str).collect();
        writeln!(file, "{}", members.join(" ")).map_err(|e| io_err(path, e))?;
    }
    file.flush().map_err(|e| io_err(path, e))
}
