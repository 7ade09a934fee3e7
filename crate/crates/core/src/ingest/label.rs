use std::fmt;

use crate::model::ClassLabel;

use super::wfdb::WfdbHeader;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RejectReason {
    /// No "Reason for admission" comment.
    MissingMetadata,
    /// Infarction without an acute localization.
    MissingLocalization,
    /// Infarction localized outside the six modelled regions.
    OutOfTaxonomy(String),
    /// Neither infarction nor healthy control.
    OtherDiagnosis(String),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::MissingMetadata => write!(f, "missing diagnosis metadata"),
            RejectReason::MissingLocalization => write!(f, "infarction without localization"),
            RejectReason::OutOfTaxonomy(loc) => write!(f, "localization `{loc}` outside taxonomy"),
            RejectReason::OtherDiagnosis(d) => write!(f, "diagnosis `{d}`"),
        }
    }
}

/// Lower-cased with all whitespace removed.
fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

fn comment_value<'a>(header: &'a WfdbHeader, key: &str) -> Option<&'a str> {
    let key = normalize(key);
    header.comments.iter().find_map(|c| {
        let (k, v) = c.split_once(':')?;
        (normalize(k) == key).then(|| v.trim())
    })
}

fn localization(norm: &str) -> Option<ClassLabel> {
    // PTB truncates one label to "infero-latera".
    if norm == "infero-latera" {
        return Some(ClassLabel::InferoLateral);
    }
    ClassLabel::ALL[1..].iter().copied().find(|c| c.name() == norm)
}

/// Maps a record's diagnosis comments to a class, or explains why not.
pub fn label_record(header: &WfdbHeader) -> Result<ClassLabel, RejectReason> {
    let reason = comment_value(header, "Reason for admission").ok_or(RejectReason::MissingMetadata)?;
    match normalize(reason).as_str() {
        "healthycontrol" => Ok(ClassLabel::Healthy),
        "myocardialinfarction" => {
            let loc = comment_value(header, "Acute infarction (localization)")
                .map(normalize)
                .filter(|l| !l.is_empty() && l != "no")
                .ok_or(RejectReason::MissingLocalization)?;
            localization(&loc).ok_or(RejectReason::OutOfTaxonomy(loc))
        }
        _ => Err(RejectReason::OtherDiagnosis(reason.to_string())),
    }
}
