//! Figure-data emitters: tidy CSV bundles matching the axes of the paper-style
//! plots, produced from a [`ResultSet`]. Data only, no plotting.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

use super::{ensemble_mean_fidelity, write_csv, ResultSet};

pub const FIGURE_IDS: [&str; 9] = [
    "fig1a", "fig1b", "fig2a", "fig2e", "fig3a", "fig3b", "fig4bc", "fig5b", "fig6a",
];

pub fn check_figure_id(id: &str) -> Result<()> {
    if FIGURE_IDS.contains(&id) {
        Ok(())
    } else {
        Err(Error::Validation {
            field: "figures".into(),
            message: format!("unknown figure id `{id}`; known: {FIGURE_IDS:?}"),
        })
    }
}

/// Emit one figure bundle into `dir`; returns the file path.
pub fn emit_figure_data(results: &ResultSet, figure: &str, dir: &Path) -> Result<PathBuf> {
    check_figure_id(figure)?;
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{figure}.csv"));
    match figure {
        "fig1a" => fig1a(results, &path)?,
        "fig1b" => fig1b(results, &path)?,
        "fig2a" => fig2a(results, &path)?,
        "fig2e" => fig2e(results, &path)?,
        "fig3a" => fig3a(results, &path)?,
        "fig3b" => fig3b(results, &path)?,
        "fig4bc" => fig4bc(results, &path)?,
        "fig5b" => fig5b(results, &path)?,
        "fig6a" => fig6a(results, &path)?,
        _ => unreachable!(),
    }
    Ok(path)
}

fn need_fidelity(results: &ResultSet, figure: &str) -> Result<()> {
    if results.fidelity.is_empty() {
        return Err(Error::MissingObservable(format!(
            "fidelity rows required for {figure}"
        )));
    }
    Ok(())
}

fn need_fisher(results: &ResultSet, figure: &str) -> Result<()> {
    if results.fisher.is_empty() {
        return Err(Error::MissingObservable(format!(
            "qfi/cfi rows required for {figure}"
        )));
    }
    Ok(())
}

fn need_spectrum(results: &ResultSet, figure: &str) -> Result<()> {
    if results.spectrum.is_empty() {
        return Err(Error::MissingObservable(format!(
            "entropies rows required for {figure}"
        )));
    }
    Ok(())
}

/// Stroboscopic revival dynamics: fidelity vs cycle per deviation.
fn fig1a(results: &ResultSet, path: &Path) -> Result<()> {
    need_fidelity(results, "fig1a")?;
    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "L")]
        sites: usize,
        omega_rad: f64,
        n: usize,
        #[serde(rename = "F")]
        fidelity: f64,
    }
    let rows: Vec<Row> = results
        .fidelity
        .iter()
        .map(|r| Row {
            sites: r.sites,
            omega_rad: r.omega_rad,
            n: r.n,
            fidelity: r.fidelity,
        })
        .collect();
    write_csv(path, &rows)
}

/// Fidelity versus deviation at each recorded cycle, plus the cycle average.
fn fig1b(results: &ResultSet, path: &Path) -> Result<()> {
    need_fidelity(results, "fig1b")?;
    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "L")]
        sites: usize,
        omega_rad: f64,
        #[serde(rename = "F_avg")]
        fidelity_avg: f64,
        cycles_averaged: usize,
    }
    let mut keys: Vec<(usize, u64)> = Vec::new();
    let mut acc: std::collections::BTreeMap<(usize, u64), (f64, usize)> =
        std::collections::BTreeMap::new();
    for r in &results.fidelity {
        let key = (r.sites, r.omega_rad.to_bits());
        if !acc.contains_key(&key) {
            keys.push(key);
        }
        let e = acc.entry(key).or_insert((0.0, 0));
        e.0 += r.fidelity;
        e.1 += 1;
    }
    let rows: Vec<Row> = keys
        .into_iter()
        .map(|key| {
            let (sum, count) = acc[&key];
            Row {
                sites: key.0,
                omega_rad: f64::from_bits(key.1),
                fidelity_avg: sum / count as f64,
                cycles_averaged: count,
            }
        })
        .collect();
    write_csv(path, &rows)
}

/// QFI (and CFI) versus deviation per recorded cycle.
fn fig2a(results: &ResultSet, path: &Path) -> Result<()> {
    need_fisher(results, "fig2a")?;
    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "L")]
        sites: usize,
        omega_rad: f64,
        n: usize,
        #[serde(rename = "FQ")]
        qfi: f64,
        #[serde(rename = "FC")]
        cfi: f64,
    }
    let rows: Vec<Row> = results
        .fisher
        .iter()
        .map(|r| Row {
            sites: r.sites,
            omega_rad: r.omega_rad,
            n: r.n,
            qfi: r.qfi,
            cfi: r.cfi,
        })
        .collect();
    write_csv(path, &rows)
}

/// Size scaling at n = 2: deep-DTC QFI (smallest deviation on the grid) and
/// the grid peak, per size.
fn fig2e(results: &ResultSet, path: &Path) -> Result<()> {
    need_fisher(results, "fig2e")?;
    let rows_n2: Vec<_> = results.fisher.iter().filter(|r| r.n == 2).collect();
    if rows_n2.is_empty() {
        return Err(Error::MissingObservable(
            "fig2e needs Fisher records at n = 2".into(),
        ));
    }
    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "L")]
        sites: usize,
        #[serde(rename = "FQ_dtc")]
        qfi_dtc: f64,
        #[serde(rename = "FQ_peak")]
        qfi_peak: f64,
    }
    let sizes: BTreeSet<usize> = rows_n2.iter().map(|r| r.sites).collect();
    let mut rows = Vec::new();
    for sites in sizes {
        let of_size: Vec<_> = rows_n2.iter().filter(|r| r.sites == sites).collect();
        let dtc = of_size
            .iter()
            .min_by(|a, b| a.omega_rad.total_cmp(&b.omega_rad))
            .unwrap();
        let peak = of_size
            .iter()
            .max_by(|a, b| a.qfi.total_cmp(&b.qfi))
            .unwrap();
        rows.push(Row {
            sites,
            qfi_dtc: dtc.qfi,
            qfi_peak: peak.qfi,
        });
    }
    write_csv(path, &rows)
}

/// Phase-diagram grid: late-time fidelity over (deviation, imperfection).
fn fig3a(results: &ResultSet, path: &Path) -> Result<()> {
    need_fidelity(results, "fig3a")?;
    let n_max = results.fidelity.iter().map(|r| r.n).max().unwrap();
    let mut text = format!("omega_rad,epsilon,F_n{n_max}\n");
    for r in results.fidelity.iter().filter(|r| r.n == n_max) {
        text.push_str(&format!("{},{},{}\n", r.omega_rad, r.epsilon, r.fidelity));
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Melting curves: averaged entanglement entropy versus imperfection per size.
fn fig3b(results: &ResultSet, path: &Path) -> Result<()> {
    need_spectrum(results, "fig3b")?;
    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "L")]
        sites: usize,
        omega_rad: f64,
        epsilon: f64,
        #[serde(rename = "S_EE_avg")]
        mean_ee: f64,
    }
    let rows: Vec<Row> = results
        .spectrum
        .iter()
        .map(|r| Row {
            sites: r.sites,
            omega_rad: r.omega_rad,
            epsilon: r.epsilon,
            mean_ee: r.mean_ee,
        })
        .collect();
    write_csv(path, &rows)
}

/// Thermal-region entropies with Page reference columns.
fn fig4bc(results: &ResultSet, path: &Path) -> Result<()> {
    need_spectrum(results, "fig4bc")?;
    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "L")]
        sites: usize,
        omega_rad: f64,
        epsilon: f64,
        #[serde(rename = "S_EE_avg")]
        mean_ee: f64,
        #[serde(rename = "S_DE_avg")]
        mean_de: f64,
        #[serde(rename = "page_S_EE")]
        page_ee: f64,
        #[serde(rename = "page_S_DE")]
        page_de: f64,
    }
    let rows: Vec<Row> = results
        .spectrum
        .iter()
        .map(|r| Row {
            sites: r.sites,
            omega_rad: r.omega_rad,
            epsilon: r.epsilon,
            mean_ee: r.mean_ee,
            mean_de: r.mean_de,
            page_ee: r.page_ee,
            page_de: r.page_de,
        })
        .collect();
    write_csv(path, &rows)
}

/// Time-averaged Fisher information versus deviation (mean over the recorded
/// cycle set).
fn fig5b(results: &ResultSet, path: &Path) -> Result<()> {
    need_fisher(results, "fig5b")?;
    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "L")]
        sites: usize,
        omega_rad: f64,
        #[serde(rename = "FQ_avg")]
        qfi_avg: f64,
        #[serde(rename = "FC_avg")]
        cfi_avg: f64,
        cycles_averaged: usize,
    }
    let mut keys: Vec<(usize, u64)> = Vec::new();
    let mut acc: std::collections::BTreeMap<(usize, u64), (f64, f64, usize)> =
        std::collections::BTreeMap::new();
    for r in &results.fisher {
        let key = (r.sites, r.omega_rad.to_bits());
        if !acc.contains_key(&key) {
            keys.push(key);
        }
        let e = acc.entry(key).or_insert((0.0, 0.0, 0));
        e.0 += r.qfi;
        e.1 += r.cfi;
        e.2 += 1;
    }
    let rows: Vec<Row> = keys
        .into_iter()
        .map(|key| {
            let (fq, fc, count) = acc[&key];
            Row {
                sites: key.0,
                omega_rad: f64::from_bits(key.1),
                qfi_avg: fq / count as f64,
                cfi_avg: fc / count as f64,
                cycles_averaged: count,
            }
        })
        .collect();
    write_csv(path, &rows)
}

/// Disorder-ensemble fidelity versus deviation.
fn fig6a(results: &ResultSet, path: &Path) -> Result<()> {
    need_fidelity(results, "fig6a")?;
    write_csv(path, &ensemble_mean_fidelity(&results.fidelity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exp::{FidelityRow, FisherRow, SpectrumSummaryRow};

    fn sample_results() -> ResultSet {
        let mut rs = ResultSet::default();
        for (sites, omega, n, fq) in [
            (8usize, 1e-4, 2usize, 10.0),
            (8, 1e-2, 2, 40.0),
            (8, 1e-1, 2, 5.0),
            (10, 1e-4, 2, 30.0),
            (10, 1e-2, 2, 90.0),
            (10, 1e-1, 2, 8.0),
        ] {
            rs.fisher.push(FisherRow {
                sites,
                omega_rad: omega,
                epsilon: 0.01,
                n,
                qfi: fq,
                cfi: fq * 0.9,
                seed: 1,
            });
        }
        for n in [2usize, 100] {
            rs.fidelity.push(FidelityRow {
                sites: 8,
                omega_rad: 1e-4,
                epsilon: 0.01,
                disorder: 0.0,
                realization: 0,
                seed: 1,
                n,
                fidelity: 1.0,
            });
        }
        rs.spectrum.push(SpectrumSummaryRow {
            sites: 8,
            omega_rad: 5e-4,
            epsilon: 0.3,
            realization: 0,
            seed: 1,
            mean_ee: 1.1,
            mean_de: 1.3,
            pairing_fraction: 1.0,
            page_ee: 2.27,
            page_de: 2.74,
        });
        rs
    }

    #[test]
    fn fig2e_columns_and_selection() {
        let dir = tempfile::tempdir().unwrap();
        let rs = sample_results();
        let path = emit_figure_data(&rs, "fig2e", dir.path()).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "L,FQ_dtc,FQ_peak");
        assert_eq!(lines.next().unwrap(), "8,10.0,40.0");
        assert_eq!(lines.next().unwrap(), "10,30.0,90.0");
    }

    #[test]
    fn fig3a_grid_format() {
        let dir = tempfile::tempdir().unwrap();
        let rs = sample_results();
        let path = emit_figure_data(&rs, "fig3a", dir.path()).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("omega_rad,epsilon,F_n100\n"));
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn fig4bc_includes_page_references() {
        let dir = tempfile::tempdir().unwrap();
        let rs = sample_results();
        let path = emit_figure_data(&rs, "fig4bc", dir.path()).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("L,omega_rad,epsilon,S_EE_avg,S_DE_avg,page_S_EE,page_S_DE\n"));
    }

    #[test]
    fn missing_observable_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let rs = ResultSet::default();
        assert!(matches!(
            emit_figure_data(&rs, "fig2a", dir.path()),
            Err(Error::MissingObservable(_))
        ));
        assert!(matches!(
            emit_figure_data(&rs, "nope", dir.path()),
            Err(Error::Validation { .. })
        ));
    }
}
