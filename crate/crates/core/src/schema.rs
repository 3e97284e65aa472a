//! Attribute taxonomy shared by the gallery, the witness and every task generator.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Literal value every attribute accepts when the annotator could not tell.
pub const UNCERTAIN: &str = "Uncertain";
/// Literal "nothing there" value used by several accessory attributes.
pub const NONE_VALUE: &str = "None";
/// Number of attributes in a well-formed schema.
pub const ATTRIBUTE_COUNT: usize = 24;
/// Number of attributes excluded from information-gain questioning.
pub const IG_EXCLUDED_COUNT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Head,
    Upper,
    Lower,
    FeetHands,
    SoftBio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeDef {
    pub name: String,
    pub category: Category,
    pub values: Vec<String>,
    pub multi_select: bool,
    pub ig_excluded: bool,
    pub clue_excluded: bool,
}

impl AttributeDef {
    pub fn has_value(&self, v: &str) -> bool {
        self.values.iter().any(|x| x == v)
    }
}

/// Value held by a person for one attribute.
///
/// Single-select attributes serialize as a JSON string, multi-select ones as a
/// sorted JSON array.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Single(String),
    Multi(BTreeSet<String>),
}

impl AttrValue {
    pub fn single(v: impl Into<String>) -> Self {
        AttrValue::Single(v.into())
    }

    pub fn multi<I, S>(vals: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        AttrValue::Multi(vals.into_iter().map(Into::into).collect())
    }

    pub fn uncertain() -> Self {
        AttrValue::Single(UNCERTAIN.to_string())
    }

    pub fn is_uncertain(&self) -> bool {
        match self {
            AttrValue::Single(v) => v == UNCERTAIN,
            AttrValue::Multi(vs) => vs.len() == 1 && vs.contains(UNCERTAIN),
        }
    }

    /// True for the literal "None" value (single, or a set holding only "None").
    pub fn is_none_value(&self) -> bool {
        match self {
            AttrValue::Single(v) => v == NONE_VALUE,
            AttrValue::Multi(vs) => vs.len() == 1 && vs.contains(NONE_VALUE),
        }
    }

    pub fn members(&self) -> Vec<&str> {
        match self {
            AttrValue::Single(v) => vec![v.as_str()],
            AttrValue::Multi(vs) => vs.iter().map(String::as_str).collect(),
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Single(v) => f.write_str(v),
            AttrValue::Multi(vs) => {
                let parts: Vec<&str> = vs.iter().map(String::as_str).collect();
                f.write_str(&parts.join(" and "))
            }
        }
    }
}

/// Trim and collapse internal whitespace. The only normalization applied before
/// case-sensitive matching against canonical values.
pub fn normalize_value(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub attributes: Vec<AttributeDef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemaViolation {
    AttributeCount(usize),
    MissingUncertain(String),
    IgExcludedSet(Vec<String>),
    ClueExcludedMissing(String),
    DuplicateValue { attribute: String, value: String },
    DuplicateAttribute(String),
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemaViolation::AttributeCount(n) => {
                write!(f, "attribute count {n} != {ATTRIBUTE_COUNT}")
            }
            SchemaViolation::MissingUncertain(a) => {
                write!(f, "attribute `{a}` lacks the `{UNCERTAIN}` value")
            }
            SchemaViolation::IgExcludedSet(got) => write!(
                f,
                "ig_excluded must be exactly {{hair_visibility, leg_visibility, body_features}}, got {got:?}"
            ),
            SchemaViolation::ClueExcludedMissing(a) => {
                write!(f, "clue_excluded must contain `{a}`")
            }
            SchemaViolation::DuplicateValue { attribute, value } => {
                write!(f, "attribute `{attribute}` repeats value `{value}`")
            }
            SchemaViolation::DuplicateAttribute(a) => write!(f, "attribute `{a}` declared twice"),
        }
    }
}

const REQUIRED_IG_EXCLUDED: [&str; 3] = ["body_features", "hair_visibility", "leg_visibility"];
const REQUIRED_CLUE_EXCLUDED: [&str; 2] = ["shoe_color", "visual_age_style"];

/// Check every schema invariant; an empty list means the schema is usable.
pub fn validate_schema(schema: &AttributeSchema) -> Vec<SchemaViolation> {
    let mut out = Vec::new();
    if schema.attributes.len() != ATTRIBUTE_COUNT {
        out.push(SchemaViolation::AttributeCount(schema.attributes.len()));
    }
    let mut names = BTreeSet::new();
    for def in &schema.attributes {
        if !names.insert(def.name.as_str()) {
            out.push(SchemaViolation::DuplicateAttribute(def.name.clone()));
        }
        if !def.has_value(UNCERTAIN) {
            out.push(SchemaViolation::MissingUncertain(def.name.clone()));
        }
        let mut seen = BTreeSet::new();
        for v in &def.values {
            if !seen.insert(v.as_str()) {
                out.push(SchemaViolation::DuplicateValue {
                    attribute: def.name.clone(),
                    value: v.clone(),
                });
            }
        }
    }
    let ig: Vec<String> = schema
        .attributes
        .iter()
        .filter(|d| d.ig_excluded)
        .map(|d| d.name.clone())
        .collect();
    let mut ig_sorted = ig.clone();
    ig_sorted.sort();
    if ig_sorted != REQUIRED_IG_EXCLUDED {
        out.push(SchemaViolation::IgExcludedSet(ig));
    }
    for req in REQUIRED_CLUE_EXCLUDED {
        let ok = schema
            .attributes
            .iter()
            .any(|d| d.name == req && d.clue_excluded);
        if !ok {
            out.push(SchemaViolation::ClueExcludedMissing(req.to_string()));
        }
    }
    out
}

impl AttributeSchema {
    pub fn get(&self, name: &str) -> Option<&AttributeDef> {
        self.attributes.iter().find(|d| d.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|d| d.name.as_str())
    }

    /// Attributes eligible for information-gain questioning (21 in the default schema).
    pub fn ig_attributes(&self) -> Vec<&AttributeDef> {
        self.attributes.iter().filter(|d| !d.ig_excluded).collect()
    }

    /// Checks that `value` is legal for `attr`. Returns a human-readable reason on failure.
    pub fn check_value(&self, attr: &str, value: &AttrValue) -> Result<(), String> {
        let def = self
            .get(attr)
            .ok_or_else(|| format!("unknown attribute `{attr}`"))?;
        match value {
            AttrValue::Single(v) => {
                if !def.has_value(v) {
                    return Err(format!("value `{v}` not legal for `{attr}`"));
                }
            }
            AttrValue::Multi(vs) => {
                if !def.multi_select {
                    return Err(format!("`{attr}` is single-select but holds a set"));
                }
                if vs.is_empty() {
                    return Err(format!("empty value set for `{attr}`"));
                }
                if let Some(bad) = vs.iter().find(|v| !def.has_value(v)) {
                    return Err(format!("value `{bad}` not legal for `{attr}`"));
                }
            }
        }
        Ok(())
    }

    /// Override the clue-excluded flags with an explicit list.
    pub fn with_clue_excluded<'a>(mut self, names: impl IntoIterator<Item = &'a str>) -> Self {
        let set: BTreeSet<&str> = names.into_iter().collect();
        for def in &mut self.attributes {
            def.clue_excluded = set.contains(def.name.as_str());
        }
        self
    }

    /// The built-in 24-attribute taxonomy.
    pub fn default_schema() -> Self {
        let colors: &[&str] = &[
            "Black", "White", "Grey", "Red", "Blue", "Green", "Yellow", "Orange", "Purple", "Pink",
            "Brown", "Neon", "Other",
        ];
        let rows: Vec<(&str, Category, Vec<&str>, bool)> = vec![
            ("hair_visibility", Category::Head, vec!["Visible", "Covered by Hat", "Bald/Shaved"], false),
            (
                "hair_style",
                Category::Head,
                vec![
                    "Short (Ear-length)",
                    "Medium (Neck-length)",
                    "Long (Shoulder+)",
                    "Ponytail/Bun",
                    "Afro/Textured",
                    "Bald",
                    "Other",
                ],
                false,
            ),
            (
                "hair_color",
                Category::Head,
                vec!["Black", "Brown", "Blonde", "Gray/White", "Dyed/Unnatural", "Other"],
                false,
            ),
            (
                "headwear_type",
                Category::Head,
                vec!["None", "Cap", "Beanie", "Helmet", "Bucket Hat", "Other"],
                false,
            ),
            ("eyewear_type", Category::Head, vec!["None", "Glasses", "Sunglasses", "Other"], false),
            (
                "mask_state",
                Category::Head,
                vec!["Properly Worn", "Chin Mask", "No Mask", "Other"],
                false,
            ),
            (
                "upper_garment_type",
                Category::Upper,
                vec![
                    "T-shirt",
                    "Shirt",
                    "Hoodie",
                    "Sweatshirt",
                    "Jacket",
                    "Vest",
                    "Suit",
                    "Puffer/Padding (Long/Short)",
                    "Coat",
                    "Dress",
                    "Uniform/Gown",
                    "Other",
                ],
                false,
            ),
            (
                "upper_color_layout",
                Category::Upper,
                vec!["Solid", "Layered", "Patterned", "Colorblock", "Graphic/Logo", "Other"],
                false,
            ),
            ("upper_garment_color", Category::Upper, colors.to_vec(), false),
            (
                "upper_state",
                Category::Upper,
                vec![
                    "Hooded",
                    "Zipper Open/Closed",
                    "Long/Short Sleeve",
                    "Sleeveless",
                    "Collared",
                    "None",
                ],
                true,
            ),
            (
                "upper_fit_style",
                Category::Upper,
                vec!["Regular", "Loose/Oversized", "Tight/Fitted", "Bulky (Padding)"],
                false,
            ),
            (
                "torso_bag_type",
                Category::Upper,
                vec!["None", "Backpack", "Shoulder Bag", "Crossbody Bag", "Lanyard/ID", "Other"],
                false,
            ),
            (
                "leg_visibility",
                Category::Lower,
                vec!["Fully Visible", "Partially Covered", "Hidden"],
                false,
            ),
            (
                "lower_garment_type",
                Category::Lower,
                vec![
                    "Trousers",
                    "Jeans",
                    "Sweatpants",
                    "Shorts",
                    "Skirt",
                    "Leggings",
                    "Work/Cargo Pants",
                    "Other",
                ],
                false,
            ),
            ("lower_garment_color", Category::Lower, colors.to_vec(), false),
            (
                "lower_color_layout",
                Category::Lower,
                vec!["Solid", "Patterned", "Colorblock", "Graphic/Logo", "Other"],
                false,
            ),
            (
                "lower_fit_style",
                Category::Lower,
                vec!["Regular", "Baggy/Loose", "Skinny/Tight", "Short"],
                false,
            ),
            (
                "shoe_type",
                Category::FeetHands,
                vec!["Sneakers", "Boots/Walker", "Dress Shoes", "Sandal/Slipper", "Other"],
                false,
            ),
            ("shoe_color", Category::FeetHands, colors.to_vec(), false),
            (
                "items_held",
                Category::FeetHands,
                vec![
                    "None",
                    "Phone",
                    "Bag/Carrier",
                    "Box",
                    "Notebook",
                    "Umbrella",
                    "Drink",
                    "Tool",
                    "Paper",
                    "Other",
                ],
                false,
            ),
            (
                "visual_age_style",
                Category::SoftBio,
                vec!["Child/Teen", "Young Adult", "Mature", "Elderly", "Uniformed"],
                false,
            ),
            ("body_shape", Category::SoftBio, vec!["Slender", "Normal", "Heavy"], false),
            (
                "body_features",
                Category::SoftBio,
                vec![
                    "Potbelly",
                    "Stocky",
                    "Muscular",
                    "Thick Thighs",
                    "Obese",
                    "Stick-like Limbs",
                    "Lanky",
                    "Petite",
                    "Thin Wrists",
                    "Frail",
                    "Tall",
                    "Short",
                    "Other",
                    "None",
                ],
                true,
            ),
            ("visual_gender", Category::SoftBio, vec!["Male", "Female"], false),
        ];
        let attributes = rows
            .into_iter()
            .map(|(name, category, vals, multi)| {
                let mut values: Vec<String> = vals.into_iter().map(String::from).collect();
                values.push(UNCERTAIN.to_string());
                AttributeDef {
                    name: name.to_string(),
                    category,
                    values,
                    multi_select: multi,
                    ig_excluded: REQUIRED_IG_EXCLUDED.contains(&name),
                    clue_excluded: DEFAULT_CLUE_EXCLUDED.contains(&name),
                }
            })
            .collect();
        AttributeSchema { attributes }
    }
}

/// Shipped clue-excluded list: the two named low-utility attributes plus eight
/// more chosen for weak value diversity as an opening clue.
pub const DEFAULT_CLUE_EXCLUDED: [&str; 10] = [
    "shoe_color",
    "visual_age_style",
    "hair_visibility",
    "leg_visibility",
    "body_features",
    "items_held",
    "mask_state",
    "upper_fit_style",
    "lower_fit_style",
    "upper_state",
];

/// Attribute map of one person.
pub type Attributes = BTreeMap<String, AttrValue>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schema_is_valid() {
        let s = AttributeSchema::default_schema();
        assert!(validate_schema(&s).is_empty(), "{:?}", validate_schema(&s));
        assert_eq!(s.attributes.len(), 24);
        assert_eq!(s.ig_attributes().len(), 21);
        assert_eq!(s.attributes.iter().filter(|d| d.clue_excluded).count(), 10);
    }

    #[test]
    fn missing_attribute_count_is_reported() {
        let mut s = AttributeSchema::default_schema();
        s.attributes.retain(|d| d.name != "hair_color");
        let v = validate_schema(&s);
        assert_eq!(v, vec![SchemaViolation::AttributeCount(23)]);
        assert!(v[0].to_string().contains("!= 24"));
    }

    #[test]
    fn missing_uncertain_names_attribute() {
        let mut s = AttributeSchema::default_schema();
        let g = s
            .attributes
            .iter_mut()
            .find(|d| d.name == "visual_gender")
            .unwrap();
        g.values.retain(|v| v != UNCERTAIN);
        let v = validate_schema(&s);
        assert_eq!(v, vec![SchemaViolation::MissingUncertain("visual_gender".into())]);
    }

    #[test]
    fn duplicate_values_and_ig_set_are_checked() {
        let mut s = AttributeSchema::default_schema();
        s.attributes[1].values.push("Bald".into());
        s.attributes[0].ig_excluded = false;
        let v = validate_schema(&s);
        assert!(v.contains(&SchemaViolation::DuplicateValue {
            attribute: "hair_style".into(),
            value: "Bald".into()
        }));
        assert!(v.iter().any(|x| matches!(x, SchemaViolation::IgExcludedSet(_))));
    }

    #[test]
    fn clue_override_keeps_required_flags_checkable() {
        let s = AttributeSchema::default_schema().with_clue_excluded(["shoe_color"]);
        let v = validate_schema(&s);
        assert_eq!(
            v,
            vec![SchemaViolation::ClueExcludedMissing("visual_age_style".into())]
        );
    }

    #[test]
    fn value_checks() {
        let s = AttributeSchema::default_schema();
        assert!(s.check_value("upper_garment_color", &AttrValue::single("Blue")).is_ok());
        assert!(s.check_value("upper_garment_color", &AttrValue::single("blue")).is_err());
        assert!(s
            .check_value("upper_state", &AttrValue::multi(["Hooded", "Collared"]))
            .is_ok());
        assert!(s
            .check_value("visual_gender", &AttrValue::multi(["Male"]))
            .is_err());
    }

    #[test]
    fn normalization_collapses_whitespace() {
        assert_eq!(normalize_value("  Dress   Shoes "), "Dress Shoes");
    }
}
