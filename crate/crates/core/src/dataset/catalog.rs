//! Static manifest of public rPPG datasets and what each one ships.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VideoKind {
    #[serde(rename = "RGB")]
    Rgb,
    #[serde(rename = "NIR")]
    Nir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelKind {
    #[serde(rename = "PPG")]
    Ppg,
    #[serde(rename = "HR")]
    Hr,
    #[serde(rename = "RR")]
    Rr,
    #[serde(rename = "BP")]
    Bp,
    #[serde(rename = "ECG")]
    Ecg,
    #[serde(rename = "SpO2")]
    SpO2,
    #[serde(rename = "HRV")]
    Hrv,
    #[serde(rename = "EDA")]
    Eda,
}

/// One dataset. `None` marks a field the source listing leaves blank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCatalogEntry {
    pub index: u32,
    pub name: String,
    pub year: u32,
    pub n_subjects: Option<u32>,
    pub video_kinds: Option<Vec<VideoKind>>,
    pub labels: Option<Vec<LabelKind>>,
    /// Labels carrying a footnote mark in the source listing.
    #[serde(default)]
    pub flagged_labels: Vec<LabelKind>,
}

const MANIFEST: &str = include_str!("../../data/catalog.json");

pub fn catalog() -> &'static [DatasetCatalogEntry] {
    static CATALOG: OnceLock<Vec<DatasetCatalogEntry>> = OnceLock::new();
    CATALOG.get_or_init(|| serde_json::from_str(MANIFEST).expect("embedded catalog is valid"))
}

/// Case-insensitive lookup by name.
pub fn find(name: &str) -> Option<&'static DatasetCatalogEntry> {
    catalog().iter().find(|e| e.name.eq_ignore_ascii_case(name.trim()))
}

pub fn manifest_json() -> &'static str {
    MANIFEST
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_shape() {
        let c = catalog();
        assert_eq!(c.len(), 27);
        assert!(c.iter().enumerate().all(|(i, e)| e.index as usize == i + 1));
        assert!(c.windows(2).all(|w| w[0].year <= w[1].year));
    }

    #[test]
    fn known_rows() {
        let ubfc = find("ubfc-rppg").unwrap();
        assert_eq!((ubfc.year, ubfc.n_subjects), (2019, Some(42)));
        assert_eq!(ubfc.labels.as_deref(), Some(&[LabelKind::Ppg, LabelKind::Hr][..]));

        let bidmc = find("BIDMC").unwrap();
        assert_eq!(bidmc.n_subjects, None);
        assert_eq!(bidmc.video_kinds, None);

        let vipl = find("VIPL-HR").unwrap();
        assert_eq!(vipl.video_kinds, None);

        let bp4d = find("BP4D+").unwrap();
        assert_eq!(bp4d.video_kinds.as_deref(), Some(&[VideoKind::Rgb, VideoKind::Nir][..]));
        assert_eq!(bp4d.flagged_labels, vec![LabelKind::Hr, LabelKind::Bp]);

        let pure = find("PURE").unwrap();
        assert!(pure.labels.as_ref().unwrap().contains(&LabelKind::SpO2));
        assert_eq!(find("Vital Videos").unwrap().n_subjects, Some(900));
        assert_eq!(find("LGGI").unwrap().labels, None);
    }
}
