//! Self-describing data files.
//!
//! CSV files start with a block of `# key: value` lines, where each value is
//! compact JSON, followed by a header row and numeric rows. Numbers are
//! written with 17 significant digits (integers verbatim), so a parse and
//! re-serialize cycle reproduces every field exactly.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::abm::AbmComparison;
use crate::bifurcation::{AreaRow, GridMeta, HopfCurve, RegionGrid};
use crate::error::{Error, Result};
use crate::odeint::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    Timeseries,
    Regions,
    Areas,
    Hopf,
    Abm,
}

impl Schema {
    pub fn name(self) -> &'static str {
        match self {
            Schema::Timeseries => "timeseries",
            Schema::Regions => "regions",
            Schema::Areas => "areas",
            Schema::Hopf => "hopf",
            Schema::Abm => "abm",
        }
    }
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "timeseries" => Schema::Timeseries,
            "regions" => Schema::Regions,
            "areas" => Schema::Areas,
            "hopf" => Schema::Hopf,
            "abm" => Schema::Abm,
            _ => return Err(Error::Format(format!("unknown schema '{s}'"))),
        })
    }
}

/// A numeric table with metadata. Keys of `meta` are kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: Schema,
    pub meta: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn format_number(v: f64) -> String {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}

impl Table {
    pub fn new(schema: Schema, columns: &[&str]) -> Self {
        Self {
            schema,
            meta: Map::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Serialize) -> Self {
        self.meta.insert(key.into(), serde_json::to_value(value).expect("serializable metadata"));
        self
    }

    pub fn meta_as<T: DeserializeOwned>(&self, key: &str) -> Result<T> {
        let v = self.meta.get(key).ok_or_else(|| Error::Format(format!("missing metadata '{key}'")))?;
        serde_json::from_value(v.clone()).map_err(|e| Error::Format(format!("metadata '{key}': {e}")))
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# schema: {}", self.schema.name()).unwrap();
        for (k, v) in &self.meta {
            writeln!(s, "# {k}: {v}").unwrap();
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).unwrap();
        for r in &self.rows {
            w.write_record(r.iter().map(|&v| format_number(v))).unwrap();
        }
        s.push_str(&String::from_utf8(w.into_inner().unwrap()).unwrap());
        s
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut schema = None;
        let mut meta = Map::new();
        let mut body = 0;
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else { break };
            body += line.len() + 1;
            let (k, v) = rest
                .trim_start()
                .split_once(": ")
                .ok_or_else(|| Error::Format(format!("bad metadata line '{line}'")))?;
            if k == "schema" {
                schema = Some(v.trim().parse()?);
            } else {
                let v = serde_json::from_str(v).map_err(|e| Error::Format(format!("metadata '{k}': {e}")))?;
                meta.insert(k.to_string(), v);
            }
        }
        let schema = schema.ok_or_else(|| Error::Format("missing schema line".into()))?;
        let mut rdr = csv::Reader::from_reader(text[body.min(text.len())..].as_bytes());
        let fmt = |e: csv::Error| Error::Format(e.to_string());
        let columns: Vec<String> = rdr.headers().map_err(fmt)?.iter().map(String::from).collect();
        if columns.is_empty() || columns.iter().all(String::is_empty) {
            return Err(Error::Format("missing header row".into()));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(fmt)?;
            let row = rec
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|_| Error::Format(format!("bad number '{f}'"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self { schema, meta, columns, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse_csv(&std::fs::read_to_string(path)?)
    }
}

/// A JSON document: `{"metadata": {...}, "records": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonDoc {
    pub metadata: Map<String, Value>,
    pub records: Vec<Value>,
}

impl JsonDoc {
    pub fn new<T: Serialize>(metadata: Map<String, Value>, records: &[T]) -> Self {
        let records = records.iter().map(|r| serde_json::to_value(r).expect("serializable record")).collect();
        Self { metadata, records }
    }

    pub fn to_string_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable document");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_string_pretty().as_bytes())
    }
}

/// Write through a temporary sibling so a failed run leaves no partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    let mut f = std::fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn trajectory_table(tr: &Trajectory) -> Table {
    let kind = tr.scenario.kind();
    let mut cols = vec!["t", "x"];
    if kind.beta_dynamic() {
        cols.push("beta");
    }
    if kind.rho_dynamic() {
        cols.push("rho");
    }
    let mut t = Table::new(Schema::Timeseries, &cols)
        .with_meta("scenario", tr.scenario)
        .with_meta("params", tr.params)
        .with_meta("stats", tr.stats);
    t.rows = tr
        .times
        .iter()
        .zip(&tr.states)
        .map(|(&time, s)| {
            let mut r = vec![time, s.x];
            r.extend(s.beta.filter(|_| kind.beta_dynamic()));
            r.extend(s.rho.filter(|_| kind.rho_dynamic()));
            r
        })
        .collect();
    t
}

pub fn grid_table(g: &RegionGrid) -> Table {
    let mut t = Table::new(Schema::Regions, &[g.x_axis.param.name(), g.y_axis.param.name(), "label"])
        .with_meta("x_axis", g.x_axis)
        .with_meta("y_axis", g.y_axis)
        .with_meta("scheme", g.scheme)
        .with_meta("grid", &g.meta)
        .with_meta("counts", g.counts());
    let xs = g.x_axis.values();
    let ys = g.y_axis.values();
    for (j, &y) in ys.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            t.rows.push(vec![x, y, g.label(i, j) as f64]);
        }
    }
    t
}

pub fn grid_from_table(t: &Table) -> Result<RegionGrid> {
    if t.schema != Schema::Regions {
        return Err(Error::Format(format!("expected a regions table, got {}", t.schema.name())));
    }
    let x_axis: crate::bifurcation::Axis = t.meta_as("x_axis")?;
    let y_axis: crate::bifurcation::Axis = t.meta_as("y_axis")?;
    let meta: GridMeta = t.meta_as("grid")?;
    if t.rows.len() != x_axis.n * y_axis.n || t.columns.len() != 3 {
        return Err(Error::Format("row count does not match the grid axes".into()));
    }
    Ok(RegionGrid {
        x_axis,
        y_axis,
        scheme: t.meta_as("scheme")?,
        labels: t.rows.iter().map(|r| r[2] as u16).collect(),
        meta,
    })
}

pub fn areas_table(rows: &[AreaRow], n: usize) -> Table {
    let mut t = Table::new(Schema::Areas, &["a", "area1", "area2", "area3", "area4", "area5", "undetermined"])
        .with_meta("cells_per_axis", n);
    t.rows = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.a];
            v.extend(r.regions);
            v.push(r.undetermined);
            v
        })
        .collect();
    t
}

pub fn hopf_table(c: &HopfCurve) -> Table {
    let mut t = Table::new(Schema::Hopf, &[c.curve.sweep_param.name(), "tau_star"])
        .with_meta("scenario", c.scenario)
        .with_meta("a", c.a)
        .with_meta("minimum", c.minimum)
        .with_meta("asymptotes", &c.asymptotes);
    t.rows = c.curve.points.iter().filter(|p| p.valid).map(|p| vec![p.sweep, p.value]).collect();
    t
}

pub fn abm_table(c: &AbmComparison) -> Table {
    let mut report = Map::new();
    report.insert("rms".into(), c.rms.into());
    report.insert("generations_compared".into(), c.generations_compared.into());
    report.insert("abm_drift".into(), serde_json::to_value(c.abm_drift).unwrap());
    report.insert("ode_drift".into(), serde_json::to_value(c.ode_drift).unwrap());
    report.insert("drift_agrees".into(), c.drift_agrees.into());
    report.insert("absorbed_at".into(), serde_json::to_value(c.abm.absorbed_at).unwrap());
    report.insert("degenerate_generations".into(), serde_json::to_value(&c.abm.degenerate_generations).unwrap());
    report.insert("p_a_capped".into(), c.abm.p_a_capped.into());
    report.insert(
        "time_normalization".into(),
        "one generation = one unit of replicator time divided by the mean per-step fitness".into(),
    );
    let mut t = Table::new(Schema::Abm, &["generation", "x_hat"]).with_meta("report", report);
    t.rows = c.abm.x_hat.iter().enumerate().map(|(g, &x)| vec![g as f64, x]).collect();
    t
}
