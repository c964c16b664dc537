//! The closed attribute vocabulary for the seven component kinds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Wildcard value meaning "unknown". Never a category of its own.
pub const CANT_SAY: &str = "Cant Say";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ComponentKind {
    FaceCutting,
    RightEyebrow,
    RightEye,
    LeftEyebrow,
    LeftEye,
    Nose,
    Lip,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 7] = [
        ComponentKind::FaceCutting,
        ComponentKind::RightEyebrow,
        ComponentKind::RightEye,
        ComponentKind::LeftEyebrow,
        ComponentKind::LeftEye,
        ComponentKind::Nose,
        ComponentKind::Lip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ComponentKind::FaceCutting => "FaceCutting",
            ComponentKind::RightEyebrow => "RightEyebrow",
            ComponentKind::RightEye => "RightEye",
            ComponentKind::LeftEyebrow => "LeftEyebrow",
            ComponentKind::LeftEye => "LeftEye",
            ComponentKind::Nose => "Nose",
            ComponentKind::Lip => "Lip",
        }
    }

    /// Directory name used inside a catalog.
    pub fn dir_name(self) -> &'static str {
        match self {
            ComponentKind::FaceCutting => "face_cutting",
            ComponentKind::RightEyebrow => "right_eyebrow",
            ComponentKind::RightEye => "right_eye",
            ComponentKind::LeftEyebrow => "left_eyebrow",
            ComponentKind::LeftEye => "left_eye",
            ComponentKind::Nose => "nose",
            ComponentKind::Lip => "lip",
        }
    }

    pub fn attributes(self) -> &'static [AttributeDef] {
        match self {
            ComponentKind::FaceCutting => FACE_CUTTING,
            ComponentKind::RightEyebrow | ComponentKind::LeftEyebrow => EYEBROW,
            ComponentKind::RightEye | ComponentKind::LeftEye => EYE,
            ComponentKind::Nose => NOSE,
            ComponentKind::Lip => LIP,
        }
    }

    pub fn attribute(self, name: &str) -> Option<&'static AttributeDef> {
        self.attributes().iter().find(|a| a.name == name)
    }
}

impl std::fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ComponentKind {
    type Err = String;

    /// Accepts `FaceCutting`, `face-cutting`, `face_cutting` and so on.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        ComponentKind::ALL
            .into_iter()
            .find(|k| k.name().to_lowercase() == norm)
            .ok_or_else(|| format!("unknown component kind '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AttributeDef {
    pub name: &'static str,
    pub values: &'static [&'static str],
}

impl AttributeDef {
    pub fn allows(&self, value: &str) -> bool {
        self.values.contains(&value)
    }
}

const SIZE: &[&str] = &["Small", "Large", "Normal", CANT_SAY];
const DENSITY: &[&str] = &["Highly Dense", "Low Dense", "Normal", CANT_SAY];

const FACE_CUTTING: &[AttributeDef] = &[
    AttributeDef {
        name: "Sex",
        values: &["Male", "Female"],
    },
    AttributeDef {
        name: "Age",
        values: &["11-20", "21-30", "31-40", "41-50", "51-60", "61-70", "Above 70"],
    },
    AttributeDef {
        name: "Shape",
        values: &["Oval", "Round", CANT_SAY],
    },
    AttributeDef {
        name: "Jaw",
        values: &["Wide", "Narrow", "Normal", CANT_SAY],
    },
    AttributeDef {
        name: "HairDensity",
        values: DENSITY,
    },
    AttributeDef {
        name: "HairColor",
        values: &["Black", "Brown", CANT_SAY],
    },
];

const EYEBROW: &[AttributeDef] = &[
    AttributeDef {
        name: "Length",
        values: SIZE,
    },
    AttributeDef {
        name: "Width",
        values: SIZE,
    },
    AttributeDef {
        name: "Shape",
        values: &["Flat", "Round", "Wavy", "Artistic", CANT_SAY],
    },
    AttributeDef {
        name: "Hair",
        values: DENSITY,
    },
];

const EYE: &[AttributeDef] = &[
    AttributeDef {
        name: "Length",
        values: SIZE,
    },
    AttributeDef {
        name: "Width",
        values: SIZE,
    },
    AttributeDef {
        name: "Shape",
        values: &["Round", "Elliptic", CANT_SAY],
    },
    AttributeDef {
        name: "EyeBollColor",
        values: &["Black", "Brown", "Green", "Blue", CANT_SAY],
    },
];

const NOSE: &[AttributeDef] = &[
    AttributeDef {
        name: "Sharpness",
        values: &["Sharp", "Blunt", "Normal", CANT_SAY],
    },
    AttributeDef {
        name: "Nostrils",
        values: SIZE,
    },
    AttributeDef {
        name: "Length",
        values: SIZE,
    },
    AttributeDef {
        name: "Width",
        values: SIZE,
    },
];

const LIP: &[AttributeDef] = &[
    AttributeDef {
        name: "Length",
        values: &["Wide", "Small", "Normal", CANT_SAY],
    },
    AttributeDef {
        name: "Width",
        values: &["Thick", "Thin", "Normal", CANT_SAY],
    },
    AttributeDef {
        name: "Surface",
        values: &["Smooth", "Wrinkled", CANT_SAY],
    },
    AttributeDef {
        name: "Mouth",
        values: &["Open", "Closed", CANT_SAY],
    },
    AttributeDef {
        name: "Shape",
        values: &["Linear", "Wavy", CANT_SAY],
    },
];

/// Attribute name to value, for one component kind.
pub type Assignment = BTreeMap<String, String>;

/// A structured face description: a partial assignment per kind. Kinds and
/// attributes left out mean "Cant Say".
pub type FaceQuery = BTreeMap<ComponentKind, Assignment>;

/// A full description: a complete assignment for every kind.
pub type FaceDescription = BTreeMap<ComponentKind, Assignment>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind}.{attribute}: {problem}")]
pub struct SchemaError {
    pub kind: ComponentKind,
    pub attribute: String,
    pub problem: SchemaProblem,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaProblem {
    #[error("unknown attribute")]
    UnknownAttribute,
    #[error("value '{0}' is not allowed")]
    InvalidValue(String),
    #[error("attribute is missing")]
    Missing,
}

impl SchemaError {
    fn new(kind: ComponentKind, attribute: &str, problem: SchemaProblem) -> Self {
        Self {
            kind,
            attribute: attribute.to_string(),
            problem,
        }
    }
}

/// A stored record needs every attribute of its kind, each with a listed value.
pub fn validate_record(kind: ComponentKind, attrs: &Assignment) -> Result<(), SchemaError> {
    check_known(kind, attrs, false)?;
    for def in kind.attributes() {
        if !attrs.contains_key(def.name) {
            return Err(SchemaError::new(kind, def.name, SchemaProblem::Missing));
        }
    }
    Ok(())
}

/// A query may omit attributes, and may use "Cant Say" for any attribute,
/// including those (Sex, Age) that list no such value for records.
pub fn validate_assignment_query(kind: ComponentKind, attrs: &Assignment) -> Result<(), SchemaError> {
    check_known(kind, attrs, true)
}

pub fn validate_query(query: &FaceQuery) -> Result<(), SchemaError> {
    query
        .iter()
        .try_for_each(|(kind, attrs)| validate_assignment_query(*kind, attrs))
}

pub fn validate_description(desc: &FaceDescription) -> Result<(), SchemaError> {
    for kind in ComponentKind::ALL {
        match desc.get(&kind) {
            Some(attrs) => validate_record(kind, attrs)?,
            None => {
                return Err(SchemaError::new(
                    kind,
                    kind.attributes()[0].name,
                    SchemaProblem::Missing,
                ))
            }
        }
    }
    Ok(())
}

fn check_known(kind: ComponentKind, attrs: &Assignment, wildcard_ok: bool) -> Result<(), SchemaError> {
    for (name, value) in attrs {
        let def = kind
            .attribute(name)
            .ok_or_else(|| SchemaError::new(kind, name, SchemaProblem::UnknownAttribute))?;
        if !(def.allows(value) || (wildcard_ok && value == CANT_SAY)) {
            return Err(SchemaError::new(kind, name, SchemaProblem::InvalidValue(value.clone())));
        }
    }
    Ok(())
}

/// One attribute: a query value (absent = wildcard) against a stored value.
/// "Cant Say" on either side matches anything.
pub fn value_matches(query: Option<&str>, stored: &str) -> bool {
    match query {
        None => true,
        Some(q) => q == CANT_SAY || stored == CANT_SAY || q == stored,
    }
}

/// Every attribute of `kind` must pass [`value_matches`].
pub fn assignment_matches(kind: ComponentKind, query: &Assignment, stored: &Assignment) -> bool {
    kind.attributes().iter().all(|def| {
        let stored_value = stored.get(def.name).map_or(CANT_SAY, String::as_str);
        value_matches(query.get(def.name).map(String::as_str), stored_value)
    })
}

/// Serializable view of the whole schema.
#[derive(Debug, Clone, Serialize)]
pub struct SchemaDocument {
    pub version: u32,
    pub wildcard: &'static str,
    pub kinds: Vec<KindSchema>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KindSchema {
    pub kind: ComponentKind,
    pub attributes: &'static [AttributeDef],
}

pub const SCHEMA_VERSION: u32 = 1;

pub fn schema_document() -> SchemaDocument {
    SchemaDocument {
        version: SCHEMA_VERSION,
        wildcard: CANT_SAY,
        kinds: ComponentKind::ALL
            .into_iter()
            .map(|kind| KindSchema {
                kind,
                attributes: kind.attributes(),
            })
            .collect(),
    }
}

/// Builds an [`Assignment`] from string pairs.
pub fn assignment<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Assignment {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_kinds_with_closed_vocabularies() {
        assert_eq!(ComponentKind::ALL.len(), 7);
        for kind in ComponentKind::ALL {
            for def in kind.attributes() {
                assert!(def.values.len() >= 2, "{kind}.{}", def.name);
            }
        }
        let with_wildcard = |k: ComponentKind, a: &str| k.attribute(a).unwrap().allows(CANT_SAY);
        assert!(!with_wildcard(ComponentKind::FaceCutting, "Sex"));
        assert!(!with_wildcard(ComponentKind::FaceCutting, "Age"));
        assert!(with_wildcard(ComponentKind::FaceCutting, "HairColor"));
        assert!(with_wildcard(ComponentKind::Lip, "Mouth"));
        assert_eq!(ComponentKind::FaceCutting.attributes().len(), 6);
        assert_eq!(ComponentKind::Lip.attributes().len(), 5);
        assert_eq!(
            ComponentKind::LeftEye.attributes(),
            ComponentKind::RightEye.attributes()
        );
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "FaceCutting".parse::<ComponentKind>().unwrap(),
            ComponentKind::FaceCutting
        );
        assert_eq!(
            "face-cutting".parse::<ComponentKind>().unwrap(),
            ComponentKind::FaceCutting
        );
        assert_eq!("left_eye".parse::<ComponentKind>().unwrap(), ComponentKind::LeftEye);
        assert!("ear".parse::<ComponentKind>().is_err());
    }

    #[test]
    fn record_validation() {
        let nose = assignment([
            ("Sharpness", "Normal"),
            ("Nostrils", "Normal"),
            ("Length", "Normal"),
            ("Width", "Normal"),
        ]);
        assert!(validate_record(ComponentKind::Nose, &nose).is_ok());

        let lip = assignment([
            ("Length", "Normal"),
            ("Width", "Thin"),
            ("Surface", "Smooth"),
            ("Shape", "Wavy"),
        ]);
        let err = validate_record(ComponentKind::Lip, &lip).unwrap_err();
        assert_eq!(err.attribute, "Mouth");
        assert_eq!(err.problem, SchemaProblem::Missing);

        let eye = assignment([
            ("Length", "Normal"),
            ("Width", "Normal"),
            ("Shape", "Round"),
            ("EyeBollColor", "Purple"),
        ]);
        let err = validate_record(ComponentKind::RightEye, &eye).unwrap_err();
        assert_eq!(err.problem, SchemaProblem::InvalidValue("Purple".into()));
        assert!(err.to_string().contains("EyeBollColor"));

        let cutting = assignment([("Sex", CANT_SAY)]);
        assert!(validate_record(ComponentKind::FaceCutting, &cutting).is_err());
    }

    #[test]
    fn query_validation() {
        assert!(validate_assignment_query(ComponentKind::FaceCutting, &assignment([("Sex", CANT_SAY)])).is_ok());
        assert!(validate_assignment_query(ComponentKind::FaceCutting, &assignment([("Sex", "Male")])).is_ok());
        let err = validate_assignment_query(ComponentKind::Nose, &assignment([("Colour", "Red")])).unwrap_err();
        assert_eq!(err.problem, SchemaProblem::UnknownAttribute);
    }

    #[test]
    fn match_truth_table() {
        // exhaustive over every (query, stored) value pair of every attribute
        for kind in ComponentKind::ALL {
            for def in kind.attributes() {
                let stored_values = def.values.iter().copied();
                for stored in stored_values {
                    assert!(value_matches(None, stored));
                    assert!(value_matches(Some(CANT_SAY), stored));
                    for &q in def.values {
                        let expected = q == stored || q == CANT_SAY || stored == CANT_SAY;
                        assert_eq!(value_matches(Some(q), stored), expected, "{q} vs {stored}");
                    }
                }
            }
        }
        assert!(value_matches(Some("Oval"), CANT_SAY));
        assert!(!value_matches(Some("Oval"), "Round"));
    }

    #[test]
    fn schema_document_lists_everything() {
        let doc = schema_document();
        assert_eq!(doc.kinds.len(), 7);
        assert_eq!(doc.kinds[2].kind, ComponentKind::RightEye);
        assert!(doc.kinds[2].attributes.iter().any(|a| a.name == "EyeBollColor"));
    }
}
