//! The `bluebus` command line: every pipeline stage, the analytics, the
//! scenario simulator and the evaluator as subcommands over plain files.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data/format errors.
//! Diagnostics go to standard error; data goes to files or standard output.
//! Given identical inputs and flags, every subcommand writes identical
//! bytes.

use std::ffi::OsString;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use bluebus_core::analytics::{
    self, detect_cotravel, hourly_series, individual_od, occupancy_by_hour,
    predict_destination, ticket_correlation, trip_duration_histogram, Direction,
    TicketCorrelationReport, TimeFilter,
};
use bluebus_core::correlate::CorrelationConfig;
use bluebus_core::io::{self, filenames};
use bluebus_core::model::{DayKind, DeviceHasher, DeviceId, StopId};
use bluebus_core::pipeline::{
    run_pipeline, stage_correlate, stage_derive_trips, stage_od_matrix, stage_stop_visits,
    PipelineConfig,
};
use bluebus_core::sim::{evaluate, read_ground_truth, simulate, write_ground_truth, Scenario};
use bluebus_core::stops::SnapConfig;
use bluebus_core::trips::GapThreshold;
use bluebus_core::Coord;

#[derive(Parser)]
#[command(
    name = "bluebus",
    version,
    about = "Passenger journeys and OD matrices from Bluetooth discovery and bus localization logs",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset plus ground truth from a scenario file
    Simulate {
        /// Scenario description (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output directory for the dataset files
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's random seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sessionize discovery sightings into device trips
    DeriveTrips {
        #[arg(long)]
        sightings: PathBuf,
        /// Output trips.csv
        #[arg(long)]
        out: PathBuf,
        /// Split trips at silences of this many seconds or more
        #[arg(long, default_value_t = GapThreshold::DEFAULT_SECONDS)]
        gap_seconds: u64,
        /// Pseudonymize device ids with this key
        #[arg(long, value_name = "KEY")]
        hash_devices: Option<String>,
    },
    /// Extract stop visits and run windows from the localization log
    StopVisits {
        #[arg(long)]
        localization: PathBuf,
        #[arg(long)]
        stops: PathBuf,
        #[arg(long)]
        routes: PathBuf,
        /// Output visits.csv
        #[arg(long)]
        out_visits: PathBuf,
        /// Output runs.csv
        #[arg(long)]
        out_runs: PathBuf,
        /// Maximum door-open fix to stop snapping distance
        #[arg(long, default_value_t = SnapConfig::DEFAULT_MAX_SNAP_M)]
        snap_meters: f64,
        /// Stop-time error margin the extraction is accurate to; consumed
        /// by correlate as its default tolerance
        #[arg(long, default_value_t = SnapConfig::DEFAULT_MARGIN_S)]
        margin_seconds: u64,
    },
    /// Assign device trips a boarding and alighting stop
    Correlate {
        #[arg(long)]
        trips: PathBuf,
        #[arg(long)]
        visits: PathBuf,
        #[arg(long)]
        runs: PathBuf,
        /// Output journeys.jsonl
        #[arg(long)]
        out_journeys: PathBuf,
        /// Output rejects.jsonl (audit of discarded trips)
        #[arg(long)]
        out_rejects: PathBuf,
        /// Tolerance around door windows when matching trip endpoints
        #[arg(long, default_value_t = CorrelationConfig::DEFAULT_EPSILON_S)]
        epsilon_seconds: u64,
        /// Pseudonymize device ids with this key
        #[arg(long, value_name = "KEY")]
        hash_devices: Option<String>,
    },
    /// Aggregate journeys into an origin/destination matrix
    OdMatrix {
        #[arg(long)]
        journeys: PathBuf,
        /// Output od.csv
        #[arg(long)]
        out: PathBuf,
        /// Keep only boardings at or after this hour of day
        #[arg(long, requires = "to_hour")]
        from_hour: Option<u8>,
        /// Keep only boardings before this hour of day
        #[arg(long, requires = "from_hour")]
        to_hour: Option<u8>,
        /// Day kinds to keep: weekday, saturday, sunday
        #[arg(long, value_delimiter = ',')]
        days: Vec<String>,
        /// Keep only journeys on this route
        #[arg(long)]
        route: Option<String>,
        /// Keep only outward or inward journeys
        #[arg(long)]
        direction: Option<String>,
    },
    /// Derived analyses over journeys and companion data
    Analyze {
        #[command(subcommand)]
        what: AnalyzeCommand,
    },
    /// Score recovered journeys against simulator ground truth
    Evaluate {
        #[arg(long)]
        journeys: PathBuf,
        /// ground_truth.jsonl from simulate
        #[arg(long)]
        truth: PathBuf,
        /// Penetration estimate to score, e.g. from analyze tickets
        #[arg(long)]
        penetration_estimate: Option<f64>,
    },
    /// Chain derive-trips, stop-visits, correlate and od-matrix
    Pipeline {
        #[arg(long)]
        sightings: PathBuf,
        #[arg(long)]
        localization: PathBuf,
        #[arg(long)]
        stops: PathBuf,
        #[arg(long)]
        routes: PathBuf,
        /// Directory receiving every stage output
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = GapThreshold::DEFAULT_SECONDS)]
        gap_seconds: u64,
        #[arg(long, default_value_t = SnapConfig::DEFAULT_MAX_SNAP_M)]
        snap_meters: f64,
        #[arg(long, default_value_t = SnapConfig::DEFAULT_MARGIN_S)]
        margin_seconds: u64,
        #[arg(long, default_value_t = CorrelationConfig::DEFAULT_EPSILON_S)]
        epsilon_seconds: u64,
        #[arg(long, value_name = "KEY")]
        hash_devices: Option<String>,
        #[command(flatten)]
        filter: FilterArgs,
    },
}

#[derive(Args)]
struct FilterArgs {
    /// Keep only boardings at or after this hour of day
    #[arg(long, requires = "to_hour")]
    from_hour: Option<u8>,
    /// Keep only boardings before this hour of day
    #[arg(long, requires = "from_hour")]
    to_hour: Option<u8>,
    /// Day kinds to keep: weekday, saturday, sunday
    #[arg(long, value_delimiter = ',')]
    days: Vec<String>,
    /// Keep only journeys on this route
    #[arg(long)]
    route: Option<String>,
    /// Keep only outward or inward journeys
    #[arg(long)]
    direction: Option<String>,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Mean simultaneous onboard count per hour of day
    Occupancy {
        #[arg(long)]
        journeys: PathBuf,
        /// Number of observed service days to average over
        #[arg(long)]
        service_days: u32,
        /// Output occupancy.csv
        #[arg(long)]
        out: PathBuf,
    },
    /// Histogram of journey durations
    Durations {
        #[arg(long)]
        journeys: PathBuf,
        /// Output durations.csv
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 300)]
        bucket_seconds: u64,
    },
    /// Correlate device trips per hour with ticket validations per hour
    Tickets {
        #[arg(long)]
        trips: PathBuf,
        #[arg(long)]
        tickets: PathBuf,
        #[arg(long)]
        runs: PathBuf,
        /// Output tickets_report.csv
        #[arg(long)]
        out: PathBuf,
    },
    /// Find device pairs that repeatedly ride together
    Cotravel {
        #[arg(long)]
        journeys: PathBuf,
        /// Output cotravel.csv (pair encounter counts)
        #[arg(long)]
        out_pairs: PathBuf,
        /// Output groups.txt (one group per line)
        #[arg(long)]
        out_groups: PathBuf,
        #[arg(long, default_value_t = analytics::DEFAULT_MIN_OVERLAP_S)]
        min_overlap_seconds: u64,
        #[arg(long, default_value_t = analytics::DEFAULT_MIN_ENCOUNTERS)]
        min_encounters: u64,
    },
    /// Predict a device's destination from its journey history
    Predict {
        #[arg(long)]
        journeys: PathBuf,
        #[arg(long)]
        device: String,
        /// Stop the passenger is standing at
        #[arg(long)]
        origin: String,
        /// weekday, saturday or sunday
        #[arg(long)]
        day_kind: String,
        /// Hour of day, 0..=23
        #[arg(long)]
        hour: u8,
        #[arg(long, default_value_t = 4)]
        band_hours: u8,
    },
}

enum CliError {
    Usage(String),
    Data(String),
}

fn usage(err: impl Display) -> CliError {
    CliError::Usage(err.to_string())
}

fn data(err: impl Display) -> CliError {
    CliError::Data(err.to_string())
}

/// Parses and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { config, out, seed } => {
            let mut scenario = Scenario::from_path(&config).map_err(data)?;
            if let Some(seed) = seed {
                scenario.set_seed(seed);
            }
            let (dataset, truth) = simulate(&scenario).map_err(data)?;
            std::fs::create_dir_all(&out).map_err(data)?;
            dataset.write_dir(&out).map_err(data)?;
            write_ground_truth(&truth, &out.join(filenames::GROUND_TRUTH)).map_err(data)?;
            eprintln!(
                "simulated {} day(s): {} sightings, {} localization records, {} tickets, {} true journeys",
                scenario.days(),
                dataset.sightings.len(),
                dataset.localization.len(),
                dataset.tickets.len(),
                truth.journeys.len(),
            );
            Ok(())
        }
        Command::DeriveTrips { sightings, out, gap_seconds, hash_devices } => {
            let gap = GapThreshold::new(gap_seconds).map_err(usage)?;
            let hasher = hash_devices.as_deref().map(DeviceHasher::new);
            let count =
                stage_derive_trips(&sightings, &out, gap, hasher.as_ref()).map_err(data)?;
            eprintln!("derived {count} trips");
            Ok(())
        }
        Command::StopVisits {
            localization,
            stops,
            routes,
            out_visits,
            out_runs,
            snap_meters,
            margin_seconds,
        } => {
            let snap = SnapConfig::new(snap_meters, margin_seconds).map_err(usage)?;
            let (visits, runs) =
                stage_stop_visits(&localization, &stops, &routes, &out_visits, &out_runs, &snap)
                    .map_err(data)?;
            eprintln!("extracted {visits} stop visits across {runs} runs");
            Ok(())
        }
        Command::Correlate {
            trips,
            visits,
            runs,
            out_journeys,
            out_rejects,
            epsilon_seconds,
            hash_devices,
        } => {
            let cfg = CorrelationConfig::new(epsilon_seconds);
            let hasher = hash_devices.as_deref().map(DeviceHasher::new);
            let (journeys, rejected) = stage_correlate(
                &trips,
                &visits,
                &runs,
                &out_journeys,
                &out_rejects,
                &cfg,
                hasher.as_ref(),
            )
            .map_err(data)?;
            eprintln!("correlated {journeys} journeys, rejected {rejected} trips");
            Ok(())
        }
        Command::OdMatrix { journeys, out, from_hour, to_hour, days, route, direction } => {
            let filter =
                build_filter(from_hour, to_hour, &days, route.as_deref(), direction.as_deref())?;
            let total = stage_od_matrix(&journeys, &out, &filter).map_err(data)?;
            eprintln!("wrote OD matrix of {total} journeys");
            Ok(())
        }
        Command::Analyze { what } => dispatch_analyze(what),
        Command::Evaluate { journeys, truth, penetration_estimate } => {
            let journeys = io::read_journeys(&journeys).map_err(data)?;
            let truth = read_ground_truth(&truth).map_err(data)?;
            let report = evaluate::<Coord>(&journeys, &truth, penetration_estimate);
            print!("{report}");
            Ok(())
        }
        Command::Pipeline {
            sightings,
            localization,
            stops,
            routes,
            out,
            gap_seconds,
            snap_meters,
            margin_seconds,
            epsilon_seconds,
            hash_devices,
            filter,
        } => {
            let config = PipelineConfig {
                gap: GapThreshold::new(gap_seconds).map_err(usage)?,
                snap: SnapConfig::new(snap_meters, margin_seconds).map_err(usage)?,
                correlation: CorrelationConfig::new(epsilon_seconds),
                filter: build_filter(
                    filter.from_hour,
                    filter.to_hour,
                    &filter.days,
                    filter.route.as_deref(),
                    filter.direction.as_deref(),
                )?,
                hasher: hash_devices.as_deref().map(DeviceHasher::new),
            };
            let summary = run_pipeline(&sightings, &localization, &stops, &routes, &out, &config)
                .map_err(data)?;
            eprintln!(
                "pipeline: {} trips -> {} visits / {} runs -> {} journeys ({} rejected) -> OD total {}",
                summary.trips,
                summary.visits,
                summary.runs,
                summary.journeys,
                summary.rejected,
                summary.od_total,
            );
            Ok(())
        }
    }
}

fn dispatch_analyze(command: AnalyzeCommand) -> Result<(), CliError> {
    match command {
        AnalyzeCommand::Occupancy { journeys, service_days, out } => {
            let journeys = io::read_journeys(&journeys).map_err(data)?;
            let curve = occupancy_by_hour(&journeys, service_days).map_err(usage)?;
            io::write_occupancy(&curve.values::<Coord>(), &out).map_err(data)?;
            eprintln!("wrote occupancy curve over {service_days} day(s)");
            Ok(())
        }
        AnalyzeCommand::Durations { journeys, out, bucket_seconds } => {
            let journeys = io::read_journeys(&journeys).map_err(data)?;
            let histogram = trip_duration_histogram(&journeys, bucket_seconds).map_err(usage)?;
            io::write_durations(histogram.bucket_width_s(), histogram.counts(), &out)
                .map_err(data)?;
            eprintln!("wrote {} duration buckets", histogram.counts().len());
            Ok(())
        }
        AnalyzeCommand::Tickets { trips, tickets, runs, out } => {
            let trips = io::load_trips(&trips).map_err(data)?;
            let tickets = io::load_tickets(&tickets).map_err(data)?;
            let runs = io::load_runs(&runs).map_err(data)?;
            let series = hourly_series(&trips, &tickets, &runs);
            let report: TicketCorrelationReport =
                ticket_correlation(&series.device_trips, &series.tickets).map_err(data)?;
            io::write_tickets_report(&series.hours, &report.hourly_pairs, &out).map_err(data)?;
            println!(
                "r_squared={:.6} scale_factor={:.6} penetration={:.6}",
                report.r_squared, report.scale_factor, report.penetration
            );
            Ok(())
        }
        AnalyzeCommand::Cotravel {
            journeys,
            out_pairs,
            out_groups,
            min_overlap_seconds,
            min_encounters,
        } => {
            let journeys = io::read_journeys(&journeys).map_err(data)?;
            let report = detect_cotravel(&journeys, min_overlap_seconds, min_encounters);
            io::write_cotravel_pairs(&report.pair_encounters, &out_pairs).map_err(data)?;
            io::write_groups(&report.groups, &out_groups).map_err(data)?;
            eprintln!(
                "found {} co-traveling pairs, {} groups",
                report.pair_encounters.len(),
                report.groups.len()
            );
            Ok(())
        }
        AnalyzeCommand::Predict { journeys, device, origin, day_kind, hour, band_hours } => {
            let device = DeviceId::new(&device).map_err(usage)?;
            let origin = StopId::new(&origin).map_err(usage)?;
            let day_kind = DayKind::from_str(&day_kind).map_err(usage)?;
            if hour >= 24 {
                return Err(CliError::Usage(format!("hour {hour} outside 0..=23")));
            }
            let journeys = io::read_journeys(&journeys).map_err(data)?;
            let history = individual_od(&journeys, &device, band_hours).map_err(usage)?;
            match predict_destination::<Coord>(&history, &origin, day_kind, hour) {
                Some((stop, confidence)) => {
                    println!("destination={stop} confidence={confidence:.6}");
                }
                None => println!("no prediction"),
            }
            Ok(())
        }
    }
}

fn build_filter(
    from_hour: Option<u8>,
    to_hour: Option<u8>,
    days: &[String],
    route: Option<&str>,
    direction: Option<&str>,
) -> Result<TimeFilter, CliError> {
    let mut filter = TimeFilter::unfiltered();
    if let (Some(from), Some(to)) = (from_hour, to_hour) {
        filter = filter.with_hours(from, to).map_err(usage)?;
    }
    if !days.is_empty() {
        let kinds = days
            .iter()
            .map(|d| DayKind::from_str(d))
            .collect::<Result<Vec<_>, _>>()
            .map_err(usage)?;
        filter = filter.with_day_kinds(kinds);
    }
    if let Some(route) = route {
        filter = filter.with_route(route);
    }
    if let Some(direction) = direction {
        filter = filter.with_direction(Direction::from_str(direction).map_err(usage)?);
    }
    Ok(filter)
}
