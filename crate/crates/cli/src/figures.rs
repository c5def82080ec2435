//! Bundled scenarios runnable with `reproduce <id>`.

use crate::config::{parse_experiment, ConfigError, ConfigIssue, Experiment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Figure {
    pub id: &'static str,
    pub file: &'static str,
    pub about: &'static str,
    pub source: &'static str,
}

macro_rules! figure {
    ($id:literal, $file:literal, $about:literal) => {
        Figure {
            id: $id,
            file: $file,
            about: $about,
            source: include_str!(concat!("../scenarios/", $file)),
        }
    };
}

pub const FIGURES: &[Figure] = &[
    figure!(
        "fig3",
        "fig3_divider.toml",
        "adjustable-divider supply, fractional change at five set voltages"
    ),
    figure!(
        "fig5",
        "fig5_wallplug.toml",
        "opto-coupled Zener wall plug, inverted response"
    ),
    figure!(
        "fig6",
        "fig6_cc.toml",
        "supply in current limit driving a 7 V load"
    ),
    figure!(
        "fig7",
        "skyrc_cc.toml",
        "two-cell charger in CC, three charge currents"
    ),
    figure!("fig8", "fig8_cv.toml", "charger in CV phase, voltage change"),
    figure!(
        "fig9",
        "fig9_power.toml",
        "charger in CV phase, transmit power sweep"
    ),
    figure!(
        "fig12",
        "fig12_cc_loads.toml",
        "current-limited supply, three load voltages"
    ),
    figure!("ranged", "ranged.toml", "charge current against antenna distance"),
    figure!(
        "overcurrent",
        "overcurrent.toml",
        "18650 charge under current-channel attack"
    ),
    figure!(
        "overvoltage",
        "overvoltage.toml",
        "18650 overcharge under ramped voltage-channel attack"
    ),
    figure!(
        "pptc",
        "pptc.toml",
        "discharge-rated PPTC during a current-channel charge attack"
    ),
];

pub fn figure(id: &str) -> Option<&'static Figure> {
    FIGURES.iter().find(|f| f.id == id)
}

/// Parses a bundled scenario. Unknown ids are validation errors.
pub fn load_figure(id: &str) -> Result<Experiment, ConfigError> {
    let Some(fig) = figure(id) else {
        return Err(ConfigError::Invalid(vec![ConfigIssue {
            line: None,
            key: "figure".into(),
            rule: format!(
                "unknown id {id:?}; expected one of {}",
                FIGURES.iter().map(|f| f.id).collect::<Vec<_>>().join(", ")
            ),
        }]));
    };
    parse_experiment(fig.source, fig.id)
}
