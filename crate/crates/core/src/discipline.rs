//! The 27 first-level subject disciplines references are resolved to.

use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DISCIPLINE_COUNT: usize = 27;

/// Discipline identifier in `1..=27`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct DisciplineId(u8);

impl DisciplineId {
    pub fn new(id: u8) -> Option<Self> {
        (1..=DISCIPLINE_COUNT as u8).contains(&id).then_some(Self(id))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based row index into per-discipline tables.
    pub fn index(self) -> usize {
        usize::from(self.0) - 1
    }

    pub fn from_index(index: usize) -> Option<Self> {
        u8::try_from(index + 1).ok().and_then(Self::new)
    }

    pub fn all() -> impl Iterator<Item = DisciplineId> {
        (1..=DISCIPLINE_COUNT as u8).map(Self)
    }
}

impl TryFrom<u8> for DisciplineId {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Self::new(value).ok_or_else(|| format!("discipline id {value} outside 1..=27"))
    }
}

impl From<DisciplineId> for u8 {
    fn from(d: DisciplineId) -> u8 {
        d.0
    }
}

impl fmt::Display for DisciplineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discipline {
    pub id: DisciplineId,
    pub full_name: String,
    pub short_name: String,
}

const BUILTIN: [(&str, &str); DISCIPLINE_COUNT] = [
    ("Medicine", "Medicine"),
    ("Biochemistry Genetics and Molecular Biology", "Biochem Mol Biol"),
    ("Agricultural and Biological Sciences", "Agricult Biol Sci"),
    ("Multidisciplinary", "Multidisciplinary"),
    ("Neuroscience", "Neuroscience"),
    ("Mathematics", "Mathematics"),
    ("Immunology and Microbiology", "Immunology"),
    ("Social Sciences", "Social"),
    ("Psychology", "Psychology"),
    ("Environmental Science", "Environmental"),
    ("Pharmacology Toxicology and Pharmaceutics", "Pharmacology"),
    ("Earth and Planetary Sciences", "Earth"),
    ("Veterinary", "Veterinary"),
    ("Arts and Humanities", "Arts"),
    ("Chemistry", "Chemistry"),
    ("Nursing", "Nursing"),
    ("Engineering", "Engineering"),
    ("Computer Science", "Computer"),
    ("Physics and Astronomy", "Physics"),
    ("Materials Science", "Materials"),
    ("Economics Econometrics and Finance", "Economics"),
    ("Health Professions", "Health"),
    ("Business Management and Accounting", "Business"),
    ("Dentistry", "Dentistry"),
    ("Decision Sciences", "Decision"),
    ("Chemical Engineering", "Chem Eng"),
    ("Energy", "Energy"),
];

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("registry file: {0}")]
    Csv(#[from] csv::Error),
    #[error("registry must list exactly 27 disciplines with ids 1..=27: {0}")]
    Shape(String),
}

/// Names for every [`DisciplineId`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisciplineRegistry {
    entries: Vec<Discipline>,
}

impl Default for DisciplineRegistry {
    fn default() -> Self {
        let entries = BUILTIN
            .iter()
            .zip(DisciplineId::all())
            .map(|(&(full, short), id)| Discipline {
                id,
                full_name: full.to_string(),
                short_name: short.to_string(),
            })
            .collect();
        Self { entries }
    }
}

impl DisciplineRegistry {
    /// Load an override table with header `id,full_name,short_name`.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, RegistryError> {
        #[derive(Deserialize)]
        struct Row {
            id: u8,
            full_name: String,
            short_name: String,
        }
        let mut slots: Vec<Option<Discipline>> = vec![None; DISCIPLINE_COUNT];
        for row in csv::Reader::from_reader(reader).deserialize::<Row>() {
            let row = row?;
            let id = DisciplineId::new(row.id)
                .ok_or_else(|| RegistryError::Shape(format!("id {} out of range", row.id)))?;
            if slots[id.index()].is_some() {
                return Err(RegistryError::Shape(format!("duplicate id {}", row.id)));
            }
            slots[id.index()] = Some(Discipline {
                id,
                full_name: row.full_name.trim().to_string(),
                short_name: row.short_name.trim().to_string(),
            });
        }
        let entries = slots
            .into_iter()
            .enumerate()
            .map(|(i, d)| d.ok_or_else(|| RegistryError::Shape(format!("missing id {}", i + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { entries })
    }

    pub fn get(&self, id: DisciplineId) -> &Discipline {
        &self.entries[id.index()]
    }

    pub fn short_name(&self, id: DisciplineId) -> &str {
        &self.get(id).short_name
    }

    pub fn iter(&self) -> impl Iterator<Item = &Discipline> {
        self.entries.iter()
    }

    /// Look up by short or full name, case-insensitively.
    pub fn find(&self, name: &str) -> Option<DisciplineId> {
        let name = name.trim();
        self.entries
            .iter()
            .find(|d| d.short_name.eq_ignore_ascii_case(name) || d.full_name.eq_ignore_ascii_case(name))
            .map(|d| d.id)
    }

    /// Ids ordered alphabetically by short name, the row order of the exported tables.
    pub fn alphabetical(&self) -> Vec<DisciplineId> {
        let mut ids: Vec<_> = self.entries.iter().map(|d| d.id).collect();
        ids.sort_by(|a, b| self.short_name(*a).cmp(self.short_name(*b)));
        ids
    }
}
