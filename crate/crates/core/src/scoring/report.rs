//! Markdown and CSV renderings of the aggregate tables.

use std::fmt::Write as _;

use super::{
    curves, delta_table, fmt_delta, recovery_row, students, AggregateCell, DeltaRow, EvaluationRecord,
    RecoveryRow, ScoringError,
};

fn pct(v: f64) -> String {
    if v.is_nan() {
        "—".into()
    } else {
        format!("{v:.2}")
    }
}

fn opt_pct(v: Option<f64>) -> String {
    v.map(pct).unwrap_or_else(|| "—".into())
}

fn domain_label(d: Option<crate::corpus::Domain>) -> &'static str {
    d.map(|d| d.as_str()).unwrap_or("all")
}

/// Start/end table with the recovery columns, one line per student model.
/// Models missing a scenario get a note instead of numbers.
pub fn recovery_markdown(records: &[EvaluationRecord]) -> String {
    let mut s = String::from(
        "| Student | Teacher model | Start w/o lesson | End w/o lesson (Δ) | Start w/ lesson | End w/ lesson (Δ) | Teacher | Rec. vs lesson start | Rec. vs teacher | Rec. vs lesson start (aggregate) | Rec. vs teacher (aggregate) |\n\
         |---|---|---|---|---|---|---|---|---|---|---|\n",
    );
    for model in students(records) {
        match recovery_row(records, &model) {
            Ok(r) => {
                writeln!(
                    s,
                    "| {} | {} | {} | {} ({}) | {} | {} ({}) | {} | {} | {} | {} | {} |",
                    r.eval_model,
                    r.teacher_model,
                    pct(r.start_wo),
                    pct(r.end_wo),
                    fmt_delta(r.end_wo - r.start_wo),
                    pct(r.start_w),
                    pct(r.end_w),
                    fmt_delta(r.end_w - r.start_w),
                    pct(r.teacher),
                    pct(r.rec_vs_lesson_start),
                    pct(r.rec_vs_teacher),
                    pct(r.rec_vs_lesson_start_aggregate),
                    pct(r.rec_vs_teacher_aggregate),
                )
                .unwrap();
            }
            Err(e) => writeln!(s, "| {model} | — | missing: {e} |||||||||").unwrap(),
        }
    }
    s
}

pub fn recovery_csv(records: &[EvaluationRecord]) -> Result<String, ScoringError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "eval_model",
        "teacher_model",
        "start_wo",
        "end_wo",
        "start_w",
        "end_w",
        "teacher",
        "rec_vs_lesson_start",
        "rec_vs_teacher",
        "rec_vs_lesson_start_aggregate",
        "rec_vs_teacher_aggregate",
        "note",
    ])?;
    for model in students(records) {
        match recovery_row(records, &model) {
            Ok(RecoveryRow {
                eval_model,
                teacher_model,
                start_wo,
                end_wo,
                start_w,
                end_w,
                teacher,
                rec_vs_lesson_start,
                rec_vs_teacher,
                rec_vs_lesson_start_aggregate,
                rec_vs_teacher_aggregate,
            }) => {
                let nums = [
                    start_wo,
                    end_wo,
                    start_w,
                    end_w,
                    teacher,
                    rec_vs_lesson_start,
                    rec_vs_teacher,
                    rec_vs_lesson_start_aggregate,
                    rec_vs_teacher_aggregate,
                ];
                let mut row = vec![eval_model, teacher_model];
                row.extend(nums.iter().map(|v| format!("{v:.4}")));
                row.push(String::new());
                w.write_record(&row)?;
            }
            Err(e) => {
                let mut row = vec![model, String::new()];
                row.extend(std::iter::repeat_n(String::new(), 9));
                row.push(e.to_string());
                w.write_record(&row)?;
            }
        }
    }
    Ok(String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"))
}

pub fn delta_markdown(rows: &[DeltaRow]) -> String {
    let mut s = String::from("| Model | Scenario | Domain | Start | End | Δ |\n|---|---|---|---|---|---|\n");
    for r in rows {
        writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            r.eval_model,
            r.scenario,
            domain_label(r.domain),
            opt_pct(r.start),
            pct(r.end),
            r.delta_display()
        )
        .unwrap();
    }
    s
}

pub fn delta_csv(rows: &[DeltaRow]) -> Result<String, ScoringError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["eval_model", "scenario", "domain", "start", "end", "delta"])?;
    for r in rows {
        w.write_record([
            r.eval_model.clone(),
            r.scenario.to_string(),
            domain_label(r.domain).to_string(),
            r.start.map(|v| format!("{v:.4}")).unwrap_or_default(),
            format!("{:.4}", r.end),
            r.delta().map(|v| format!("{v:.4}")).unwrap_or_default(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"))
}

pub fn curves_csv(cells: &[AggregateCell]) -> Result<String, ScoringError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["eval_model", "scenario", "domain", "round", "mean", "ci_low", "ci_high", "n"])?;
    for c in cells {
        w.write_record([
            c.eval_model.clone(),
            c.scenario.to_string(),
            domain_label(c.domain).to_string(),
            c.round.to_string(),
            format!("{:.4}", c.mean),
            format!("{:.4}", c.ci_low),
            format!("{:.4}", c.ci_high),
            c.n.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"))
}

/// All report files as `(file name, contents)`.
pub fn build_report(
    records: &[EvaluationRecord],
    resamples: usize,
    seed: u64,
) -> Result<Vec<(String, String)>, ScoringError> {
    let deltas = delta_table(records);
    let cells = curves(records, resamples, seed);
    Ok(vec![
        ("recovery.md".into(), recovery_markdown(records)),
        ("recovery.csv".into(), recovery_csv(records)?),
        ("deltas.md".into(), delta_markdown(&deltas)),
        ("deltas.csv".into(), delta_csv(&deltas)?),
        ("curves.csv".into(), curves_csv(&cells)?),
    ])
}
