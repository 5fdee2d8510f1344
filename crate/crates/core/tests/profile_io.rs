//! Profile CSV round trips and validation.

use proptest::prelude::*;
use storopt::profiles::{read_profiles, synth_profiles, write_profiles, Climate, SynthTemplate};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthetic_profiles_round_trip_bit_for_bit(
        seed in any::<u64>(),
        cooling in 0.0..5000.0f64,
        electric in 1.0..3000.0f64,
        days in 1u32..20,
        start_day in 1u32..340,
        steps_per_hour in prop::sample::select(vec![1u32, 2, 4]),
    ) {
        let mut tpl = SynthTemplate::new(cooling, electric, Climate::hot_summer());
        tpl.days = days;
        tpl.start_day = start_day;
        tpl.steps_per_hour = steps_per_hour;
        let set = synth_profiles(seed, &tpl).unwrap();
        prop_assert_eq!(set.len(), (days * 24 * steps_per_hour) as usize);
        prop_assert_eq!(set.peak_cooling(), cooling);
        prop_assert_eq!(set.peak_electric(), electric);

        let mut buf = Vec::new();
        write_profiles(&set, &mut buf).unwrap();
        let back = read_profiles(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &set);
        let mut again = Vec::new();
        write_profiles(&back, &mut again).unwrap();
        prop_assert_eq!(buf, again);
    }
}

#[test]
fn synthesis_is_deterministic_per_seed() {
    let tpl = SynthTemplate::new(1000.0, 500.0, Climate::mild());
    let a = synth_profiles(3, &tpl).unwrap();
    assert_eq!(a, synth_profiles(3, &tpl).unwrap());
    assert_ne!(a.cooling_kw, synth_profiles(4, &tpl).unwrap().cooling_kw);
    assert_eq!(a.len(), 8760);
}

#[test]
fn malformed_files_are_rejected() {
    let cases = [
        "time,cooling_kw,electric_nonflex_kw,oat_c\n2023-01-01T00:00:00,1,2,3\n",
        "timestamp,cooling_kw,electric_nonflex_kw,oat_c\n",
        "timestamp,cooling_kw,electric_nonflex_kw,oat_c\n2023-01-01T00:00:00,-1,2,3\n2023-01-01T01:00:00,1,2,3\n",
        "timestamp,cooling_kw,electric_nonflex_kw,oat_c\n2023-01-01T00:00:00,1,2,3\n2023-01-01T02:00:00,1,2,3\n2023-01-01T03:00:00,1,2,3\n",
        "timestamp,cooling_kw,electric_nonflex_kw,oat_c\n2023-01-01T00:00:00,1,x,3\n",
        "timestamp,cooling_kw,electric_nonflex_kw,oat_c\n2023-01-01T01:00:00,1,2,3\n2023-01-01T00:00:00,1,2,3\n",
    ];
    for text in cases {
        assert!(read_profiles(text.as_bytes()).is_err(), "accepted:\n{text}");
    }
}

#[test]
fn columns_may_come_in_any_order() {
    let text = "oat_c,timestamp,electric_nonflex_kw,cooling_kw\n20,2023-05-01T00:00:00,300,100\n21,2023-05-01T01:00:00,310,120\n";
    let set = read_profiles(text.as_bytes()).unwrap();
    assert_eq!(set.cooling_kw, vec![100.0, 120.0]);
    assert_eq!(set.oat_c, vec![20.0, 21.0]);
    assert_eq!(set.dt, 1.0);
}
