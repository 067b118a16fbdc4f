//! The golden reference table: named ring spectra, their coefficient-ring
//! presentations, and the shift values the engine must reproduce. Every row
//! is recomputed from scratch on each run and diffed against the stored
//! value; the stored values are never echoed back as results.

use gorshift::cochain_duality::{cochain_shift, maximal_value, CoefficientData, GroupData};
use gorshift::graded_rings::{catalog_maps, RingError, RingMapDescriptor};
use gorshift::ring_dsl::parse_ring;
use gorshift::shift_calculus::{descent_shift, lgd_shift, pipeline_shift, rsop_function};

use crate::render::cases_text;

/// One reference row. `g` is the symbolic group-dimension parameter for the
/// cochain rows; the descent rows carry none.
#[derive(Debug, Clone)]
pub struct ExampleRow {
    pub name: &'static str,
    pub ring: &'static str,
    pub g: Option<&'static str>,
    pub golden: &'static str,
    pub rule: &'static str,
}

pub const TMF2: &str = "Z loc(2)[s^+-1:0] loc(s-1)[alpha^+-1:4]";
pub const TMF3: &str =
    "Z loc(3)[zeta:0]/(zeta^2+zeta+1)[t:0] loc(t, 1-zeta*t, 1+zeta^2*t)[beta^+-1:2]";

pub fn golden_rows() -> Vec<ExampleRow> {
    vec![
        ExampleRow {
            name: "H k",
            ring: "Q",
            g: Some("g"),
            golden: "g",
            rule: "base; cochain closed form",
        },
        ExampleRow {
            name: "H Z",
            ring: "Z",
            g: Some("g"),
            golden: "g - 1",
            rule: "base; cochain closed form",
        },
        ExampleRow {
            name: "ku",
            ring: "Z[v:2]",
            g: Some("g"),
            golden: "g - 4",
            rule: "base, adjoin; cochain closed form",
        },
        ExampleRow {
            name: "KU",
            ring: "Z[v^+-1:2]",
            g: Some("g"),
            golden: "g - 1",
            rule: "base, periodicity; cochain closed form",
        },
        ExampleRow {
            name: "E_n",
            ring: "W(F_9)[[u1:0,u2:0]][beta^+-1:2]",
            g: Some("g"),
            golden: "g - 3",
            rule: "base, deformation parameters, periodicity; cochain closed form",
        },
        ExampleRow {
            name: "THH",
            ring: "F_3[mu:2]",
            g: Some("g"),
            golden: "g - 3",
            rule: "base, adjoin; cochain closed form",
        },
        ExampleRow {
            name: "tmf",
            ring: "Z_(5)[c4:8,c6:12]",
            g: Some("g"),
            golden: "g - 23",
            rule: "base, adjoin; cochain closed form",
        },
        ExampleRow {
            name: "tmf_1(2)",
            ring: "Z_(3)[a2:4,a4:8]",
            g: Some("g"),
            golden: "g - 15",
            rule: "base, adjoin; cochain closed form",
        },
        ExampleRow {
            name: "tmf_1(3)",
            ring: "Z_(2)[a1:2,a3:6]",
            g: Some("g"),
            golden: "g - 11",
            rule: "base, adjoin; cochain closed form",
        },
        ExampleRow {
            name: "TMF(2)",
            ring: TMF2,
            g: Some("g"),
            golden: "g - 2",
            rule: "base, localization, periodicity; cochain closed form",
        },
        ExampleRow {
            name: "TMF(3)",
            ring: TMF3,
            g: Some("g"),
            golden: "g - 2",
            rule: "base, localization, quotient, periodicity; cochain closed form",
        },
        ExampleRow {
            name: "KO",
            ring: "Z[beta^+-1:8]",
            g: None,
            golden: "coht(p) - 3",
            rule: "periodicity, local duality on KU; descent along KO->KU",
        },
        ExampleRow {
            name: "ko",
            ring: "Z[beta:8]",
            g: None,
            golden: "contains beta -> coht(p) - 6; else -> coht(p) - 4",
            rule: "parameter rule, local duality on ku; descent along ko->ku",
        },
    ]
}

fn catalog_map(name: &str) -> Result<RingMapDescriptor, RingError> {
    catalog_maps()
        .into_iter()
        .find(|m| m.name == name)
        .ok_or_else(|| RingError::Unknown(format!("no catalog map named {name:?}")))
}

fn recorded_shift(f: &RingMapDescriptor) -> Result<i64, RingError> {
    f.relative_gorenstein_shift.ok_or_else(|| {
        RingError::Unknown(format!("the catalog records no relative shift for {}", f.name))
    })
}

/// Recompute one row through the engine. The cochain rows run the closed
/// form for a symbolic compact Lie group; the two descent rows pull the
/// periodic/connective complex-K-theory duality shift back along the
/// catalog map.
pub fn compute_row(row: &ExampleRow) -> Result<String, RingError> {
    match row.name {
        "KO" => {
            let f = catalog_map("KO->KU")?;
            let a = recorded_shift(&f)?;
            let nu = pipeline_shift(&f.target)?;
            let sigma = lgd_shift(&nu, &f.target)?;
            let down = descent_shift(&f, a, &sigma.shift)?;
            Ok(cases_text(&down.shift))
        }
        "ko" => {
            let f = catalog_map("ko->ku")?;
            let a = recorded_shift(&f)?;
            let nu = rsop_function(&f.target)?;
            let sigma = lgd_shift(&nu, &f.target)?;
            let down = descent_shift(&f, a, &sigma.shift)?;
            Ok(cases_text(&down.shift))
        }
        _ => {
            let ring = parse_ring(row.ring)
                .map_err(|d| RingError::Unsupported(format!("ring text: {}", d.message)))?;
            let coeff = CoefficientData::new(&ring, true)?;
            let group = GroupData::generic("G", true);
            let report = cochain_shift(&coeff, &group)?;
            Ok(maximal_value(&report)?.text())
        }
    }
}
