//! Fixed-schema CSV time series.

use std::path::Path;

use soliton_core::sweep::RunRecord;

/// One sampled instant. Vectors have one entry per axis; missing values are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub mass: f64,
    pub energy: f64,
    pub internal: f64,
    pub dynamical: f64,
    pub charge: f64,
    pub momentum: Vec<f64>,
    pub k: Vec<f64>,
    pub h: Vec<f64>,
    pub f: Vec<f64>,
    pub qhat: Vec<f64>,
    pub q_classical: Vec<f64>,
    pub p_classical: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum SeriesError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: malformed time series: {message}")]
    Format { path: String, message: String },
}

const VECTORS: [&str; 9] = [
    "q_eps", "p_eps", "P_total", "K_eps", "H_eps", "F_eps", "qhat", "q_classical", "p_classical",
];

fn axis_names(base: &str, dim: usize) -> impl Iterator<Item = String> + '_ {
    (1..=dim).map(move |i| format!("{base}_{i}"))
}

pub fn header(dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(axis_names(VECTORS[0], dim));
    h.extend(axis_names(VECTORS[1], dim));
    h.extend(["m_eps", "E_total", "J_internal", "G_dynamical", "C_charge"].map(String::from));
    for base in &VECTORS[2..] {
        h.extend(axis_names(base, dim));
    }
    h
}

impl SeriesRow {
    fn values(&self) -> Vec<f64> {
        let mut v = vec![self.t];
        v.extend(&self.q);
        v.extend(&self.p);
        v.extend([self.mass, self.energy, self.internal, self.dynamical, self.charge]);
        for part in [&self.momentum, &self.k, &self.h, &self.f, &self.qhat, &self.q_classical, &self.p_classical] {
            v.extend(part);
        }
        v
    }

    fn from_values(v: &[f64], dim: usize) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let s = v[at..at + n].to_vec();
            at += n;
            s
        };
        let t = take(1)[0];
        let q = take(dim);
        let p = take(dim);
        let s = take(5);
        Self {
            t,
            q,
            p,
            mass: s[0],
            energy: s[1],
            internal: s[2],
            dynamical: s[3],
            charge: s[4],
            momentum: take(dim),
            k: take(dim),
            h: take(dim),
            f: take(dim),
            qhat: take(dim),
            q_classical: take(dim),
            p_classical: take(dim),
        }
    }
}

/// Rows of a run, with the classical path aligned by sample index.
pub fn rows_from_record(record: &RunRecord) -> Vec<SeriesRow> {
    let dim = record.grid_points.len();
    let nan = vec![f64::NAN; dim];
    record
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (q, p, mass) = s
                .state
                .as_ref()
                .map_or((nan.clone(), nan.clone(), f64::NAN), |st| (st.q.clone(), st.p.clone(), st.mass));
            let (k, h, f) = s
                .halo
                .as_ref()
                .map_or((nan.clone(), nan.clone(), nan.clone()), |ht| (ht.k.clone(), ht.h(), ht.f.clone()));
            SeriesRow {
                t: s.t,
                q,
                p,
                mass,
                energy: s.energy.total,
                internal: s.energy.internal,
                dynamical: s.energy.dynamical,
                charge: s.energy.charge,
                momentum: s.energy.momentum.clone(),
                k,
                h,
                f,
                qhat: s.concentration.position.clone(),
                q_classical: record.classical.q.get(i).cloned().unwrap_or_else(|| nan.clone()),
                p_classical: record.classical.p.get(i).cloned().unwrap_or_else(|| nan.clone()),
            }
        })
        .collect()
}

/// 17 significant digits: exact round trip for every finite f64.
pub fn render(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn timeseries_bytes(rows: &[SeriesRow], dim: usize) -> Result<Vec<u8>, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header(dim)).map_err(|e| e.to_string())?;
    for (i, row) in rows.iter().enumerate() {
        let v = row.values();
        if v.len() != 6 + 9 * dim {
            return Err(format!("row {i} does not have {dim} components per vector"));
        }
        w.write_record(v.into_iter().map(render)).map_err(|e| e.to_string())?;
    }
    w.into_inner().map_err(|e| e.to_string())
}

pub fn write_timeseries(rows: &[SeriesRow], dim: usize, path: &Path) -> Result<(), SeriesError> {
    let err = |message: String| SeriesError::Io {
        path: path.display().to_string(),
        message,
    };
    let bytes = timeseries_bytes(rows, dim).map_err(err)?;
    std::fs::write(path, bytes).map_err(|e| err(e.to_string()))
}

/// Parses a file written by [`write_timeseries`]; returns the dimension and rows.
pub fn read_timeseries(path: &Path) -> Result<(usize, Vec<SeriesRow>), SeriesError> {
    let fmt = |message: String| SeriesError::Format {
        path: path.display().to_string(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| SeriesError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let head: Vec<String> = r.headers().map_err(|e| fmt(e.to_string()))?.iter().map(String::from).collect();
    if head.len() < 15 || (head.len() - 6) % 9 != 0 {
        return Err(fmt(format!("{} columns", head.len())));
    }
    let dim = (head.len() - 6) / 9;
    if head != header(dim) {
        return Err(fmt("unexpected header".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| fmt(e.to_string()))?;
        let vals = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| fmt(format!("row {}: {e}", i + 1)))?;
        rows.push(SeriesRow::from_values(&vals, dim));
    }
    Ok((dim, rows))
}
