use polar_sced::channel::{run_fer, DecoderSpec, FrameDecoder, StopCriteria};
use polar_sced::config::preset;
use polar_sced::decode::{DecoderOptions, LlrWord};
use polar_sced::design::{collect_urps, design_ensemble, DesignParams, Reference};
use polar_sced::io;
use polar_sced::pretransform::TargetPolicy;
use polar_sced::sced::{verify_coverage, CoverageMode, Pooling};

#[test]
fn designed_ensemble_survives_files_and_decodes_clean_words() {
    let setup = preset("5g-64-32-crc6")
        .unwrap()
        .code
        .setup(vec![], DecoderOptions::default())
        .unwrap();
    let urps = collect_urps(&setup, Reference::Scl { list_size: 4 }, 3.0, 30, 2, 1).unwrap();

    let mut buf = Vec::new();
    io::write_urps(&mut buf, setup.code(), Reference::Scl { list_size: 4 }, &urps).unwrap();
    let (_, loaded) = io::read_urps(buf.as_slice(), setup.code()).unwrap();
    assert_eq!(loaded, urps);

    let params = DesignParams {
        candidates: 40,
        depth: 2,
        policy: TargetPolicy::UniformInfo,
        paths: 4,
        list_size: 4,
        seed: 2,
    };
    let a = design_ensemble(&setup, &urps, &params, 1).unwrap();
    let b = design_ensemble(&setup, &loaded, &params, 1).unwrap();
    assert_eq!(a.ensemble, b.ensemble);
    assert!(a.coverage >= a.best_single);

    let text = io::write_ensemble(&a.ensemble, 4);
    let (ens, l) = io::read_ensemble(&text, setup.code()).unwrap();
    assert_eq!(ens, a.ensemble);
    let cov = verify_coverage(&ens, CoverageMode::Sampled { trials: 300, seed: 2 }).unwrap();
    assert!(cov.covered);

    let spec = DecoderSpec::Sced {
        ensemble: ens,
        list_size: l,
        pooling: Pooling::FullList,
    };
    let mut dec = FrameDecoder::new(&setup, &spec).unwrap();
    for m in 0..20u64 {
        let payload: Vec<u8> = (0..32).map(|j| (((m * 2654435761) >> j) & 1) as u8).collect();
        let (_, x) = setup.encode(&payload);
        let r = dec.decode(&setup, &LlrWord::noiseless(&x));
        assert_eq!(r.x_hat, x);
        assert!(r.in_subcode);
    }
}

#[test]
fn stronger_decoders_do_not_lose_frames_at_high_snr() {
    let setup = preset("5g-64-32-crc6")
        .unwrap()
        .code
        .setup(vec![], DecoderOptions::default())
        .unwrap();
    let stop = StopCriteria {
        min_frame_errors: u64::MAX,
        max_frames: 2000,
    };
    let sc = &run_fer(&setup, &DecoderSpec::Sc, &[2.5], stop, 4, 1).unwrap()[0];
    let scl = &run_fer(&setup, &DecoderSpec::Scl { list_size: 8 }, &[2.5], stop, 4, 1).unwrap()[0];
    assert_eq!(sc.frames, 2000);
    assert!(sc.censored);
    assert!(
        scl.frame_errors < sc.frame_errors,
        "SCL {} vs SC {}",
        scl.frame_errors,
        sc.frame_errors
    );
}
