use nsimq::alignment::global_align;
use nsimq::fixtures::{apply, speech_like, DegradationSpec};
use nsimq::AudioSignal;

fn delayed(signal: &AudioSignal, samples: usize) -> AudioSignal {
    apply(signal, DegradationSpec::Delay { samples }, 0).unwrap()
}

#[test]
fn global_delay_is_recovered_exactly() {
    let reference = speech_like(4.0, 16_000, 31);
    for delay in [10, 160, 1000, 8000] {
        let aligned = global_align(&reference, &delayed(&reference, delay)).unwrap();
        assert_eq!(aligned.lag_samples, delay as isize);
        assert_eq!(aligned.reference.len(), aligned.degraded.len());
        assert_eq!(
            aligned.reference.samples()[..1000],
            aligned.degraded.samples()[..1000]
        );
    }
}

#[test]
fn advanced_degraded_gives_negative_lag() {
    let reference = speech_like(4.0, 16_000, 32);
    let later = delayed(&reference, 500);
    let aligned = global_align(&later, &reference).unwrap();
    assert_eq!(aligned.lag_samples, -500);
}

#[test]
fn global_delay_survives_moderate_noise() {
    let reference = speech_like(4.0, 16_000, 33);
    let noisy = apply(
        &delayed(&reference, 1000),
        DegradationSpec::Awgn { snr_db: 20.0 },
        34,
    )
    .unwrap();
    let lag = global_align(&reference, &noisy).unwrap().lag_samples;
    assert!((lag - 1000).abs() <= 2, "lag {lag}");
}

#[test]
fn rate_mismatch_is_an_error() {
    let a = speech_like(1.0, 16_000, 35);
    let b = AudioSignal::new(a.samples().to_vec(), 48_000).unwrap();
    assert!(global_align(&a, &b).is_err());
}
