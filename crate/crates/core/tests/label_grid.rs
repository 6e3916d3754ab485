//! Exhaustive labeling grid checked against a table evaluated by hand.

use survmine::label::{algorithm1_flag, apply_rules, Outcome, SurvivalFlag};
use survmine::record::{AgeBin, DeathCause, LymphNodes, MaritalStatus, Race, VitalStatus};
use survmine::{LabelingConfig, Locator, PatientRecord};

const GRID: &str = include_str!("fixtures/label_grid.tsv");

fn record(
    months: Option<u32>,
    vital: VitalStatus,
    cause: DeathCause,
    year: i32,
    line: usize,
) -> PatientRecord {
    PatientRecord {
        locator: Locator {
            file: "grid".into(),
            line,
        },
        age_bin: Some(AgeBin::From65To74),
        race: Race::White,
        marital_status: MaritalStatus::Married,
        primary_site: "C341".into(),
        histologic_type: Some("8140".into()),
        tumor_size_mm: Some(25),
        extension: Some("Localized".into()),
        lymph_nodes: LymphNodes::No,
        surgery_site: Some("LungAndBronchus".into()),
        radiation: Some("BeamRadiation".into()),
        stage: Some("Localized".into()),
        radiation_sequence: Some("PostSurgery".into()),
        survival_months: months,
        vital_status: vital,
        death_cause: cause,
        diagnosis_year: year,
    }
}

#[test]
fn every_grid_cell_matches_the_hand_table() {
    let cfg = LabelingConfig::default();
    let mut rows = 0;
    for (i, line) in GRID.lines().enumerate().skip(1) {
        let c: Vec<&str> = line.split('\t').collect();
        assert_eq!(c.len(), 8, "line {}", i + 1);
        let months = (c[0] != "?").then(|| c[0].parse().unwrap());
        let vital = match c[1] {
            "alive" => VitalStatus::Alive,
            "dead" => VitalStatus::Dead,
            other => panic!("vital {other}"),
        };
        let cause = match c[2] {
            "lung" => DeathCause::Code("C349".into()),
            "other" => DeathCause::Code("I219".into()),
            "missing" => DeathCause::Missing,
            other => panic!("cause {other}"),
        };
        let year = if c[3] == "yes" { 1999 } else { 1990 };
        let r = record(months, vital, cause, year, i + 1);

        let flag = algorithm1_flag(&r, &cfg);
        let five = match flag {
            SurvivalFlag::Survived => "survived",
            SurvivalFlag::NotSurvived => "not_survived",
            SurvivalFlag::Removed(_) => "removed",
        };
        assert_eq!(
            (five, flag.fired_rule().as_str()),
            (c[4], c[5]),
            "five-year, line {}: {line}",
            i + 1
        );

        let d = apply_rules(&r, &cfg);
        let short_long = match d.outcome {
            Outcome::LongTermSurvivor => "long_term",
            Outcome::ShortTermSurvivor => "short_term",
            Outcome::Removed => "removed",
        };
        assert_eq!(
            (short_long, d.fired_rule.as_str()),
            (c[6], c[7]),
            "short/long, line {}: {line}",
            i + 1
        );
        assert_eq!(d.outcome == Outcome::Removed, d.fired_rule.removes());
        rows += 1;
    }
    assert_eq!(rows, 8 * 2 * 3 * 2);
}
