//! From a pre-study month of step counts to the four baseline cells, and
//! from a post-nudge window to the relative reward.

use pearl::baseline::{check_eligibility, window_steps};
use pearl::domain::{day_of_week, DeliveryTime, ParticipantId, StepRecord};
use pearl::{compute_baseline, compute_reward};

fn main() {
    let id = ParticipantId(7);
    let enrollment_day = 19_754; // 2024-02-01
    // Weekdays around 6,000 steps, weekends around 4,500; day 0 is onboarding.
    let records: Vec<StepRecord> = (-30..=2)
        .map(|day: i32| {
            let weekend = day_of_week(enrollment_day + i64::from(day)) >= 5;
            let total: u32 = if weekend { 4_500 } else { 6_000 } + (day.rem_euclid(5) as u32) * 100;
            StepRecord::new(id, day, total * 2 / 5, total - total * 2 / 5)
        })
        .collect();

    let pre: Vec<StepRecord> = records.iter().copied().filter(|r| r.day < 0).collect();
    println!("eligible (< 8,000 steps/day): {}", check_eligibility(&pre).unwrap());
    let baseline = compute_baseline(&records, enrollment_day).expect("enough wear days");
    for (morning, weekday, steps) in baseline.cells() {
        println!("morning={morning:<5} weekday={weekday:<5} baseline {steps:.0}");
    }

    for time in [DeliveryTime::Morning, DeliveryTime::Afternoon] {
        let y = window_steps(&records, 1, time).expect("window observed") * 1.1;
        let weekday = day_of_week(enrollment_day + 1) < 5;
        let r = compute_reward(y, &baseline, time.is_morning(), weekday).unwrap();
        println!("{time:?} nudge on day 1, window {y:.0} steps (+10%): reward {:+.3}", r.value);
    }
}
