"""Module containing the tests of the synthetic dataset generation"""
import numpy
import numpy.testing as npt
import pytest
from scipy.ndimage import center_of_mass
from datasynthesis import load_synth_config, generate_sample, generate_samples, \
    generate_dataset, load_dataset, preprocess, augment, apply_augmentation, \
    draw_augmentation, AugmentationParameters, bayes_auc_oracle, DataSynthesisService, \
    sample_rng, DATASET_FILES, DEFAULT_THRESHOLD
from datasynthesis.samplegenerator import draw_record
from datasynthesis.augmentation import MAX_ROTATION, MAX_SHEAR, MAX_TRANSLATION, SCALE_RANGE


def _config(**overrides):
    defaults = {"n_samples": 40, "oracle_samples": 10000}
    defaults.update(overrides)
    return load_synth_config(overrides=defaults)


def test_synthesis_is_deterministic(tmp_path):
    cfg = _config()
    generate_dataset(cfg, tmp_path / "first")
    generate_dataset(cfg, tmp_path / "second")
    for name in DATASET_FILES:
        assert (tmp_path / "first" / name).read_bytes() == \
            (tmp_path / "second" / name).read_bytes()


def test_samples_do_not_depend_on_generation_order():
    cfg = _config(n_samples=12)
    serial = generate_samples(cfg)
    npt.assert_array_equal(generate_sample(cfg, 7).image, serial[7].image)
    assert generate_sample(cfg, 7).record == serial[7].record
    assert sample_rng(0, 3).random() != sample_rng(0, 4).random()


def test_parallel_generation_matches_serial():
    cfg = _config(n_samples=10)
    serial = generate_samples(cfg)
    parallel = generate_samples(cfg, workers=2)
    for first, second in zip(serial, parallel):
        npt.assert_array_equal(first.image, second.image)
        assert first.record == second.record


def test_no_prevalence_gives_no_lesion():
    cfg = _config(p_pos=0.0, distractor_probability=0.0)
    for sample in generate_samples(cfg):
        assert sample.label_malignancy == 0
        assert sample.amplitude == 0.0


def test_samples_are_well_formed():
    for sample in generate_samples(_config(n_samples=20, include_birads=True)):
        assert sample.image.shape == (1, 64, 64)
        assert sample.image.dtype == numpy.float32
        assert numpy.all((sample.image >= 0) & (sample.image <= 1))
        assert sample.label_calcification == 0
        sample.record.validate()


def test_calcification_task_labels():
    samples = generate_samples(_config(task="calcification", p_pos=0.5, n_samples=20))
    assert all(sample.label_malignancy == 0 for sample in samples)
    assert {sample.label_calcification for sample in samples} == {0, 1}


def test_positive_density_distribution_converges():
    cfg = _config()
    rng = numpy.random.default_rng(0)
    densities = [draw_record(cfg, 1, rng).breast_density for _ in range(50000)]
    present = [density for density in densities if density is not None]
    frequencies = [present.count(category) / len(present) for category in "ABCD"]
    npt.assert_allclose(frequencies, [0.05, 0.20, 0.35, 0.40], atol=0.02)


def test_metadata_shift_zero_removes_label_dependence():
    cfg = _config(metadata_shift=0.0)
    assert cfg.density_probabilities(0) == cfg.density_probabilities(1)
    assert cfg.age_distribution(0) == cfg.age_distribution(1)


def test_pools_outside_domains_are_rejected():
    with pytest.raises(ValueError):
        _config(nationality_pool=["atlantean"])


def test_preprocess_zeroes_dark_images():
    npt.assert_array_equal(preprocess(numpy.full((1, 16, 16), 30 / 255)),
                           numpy.zeros((1, 16, 16)))


def test_preprocess_single_bright_pixel():
    image = numpy.zeros((16, 16))
    image[5, 9] = 0.7
    output = preprocess(image, size=(8, 8))
    assert output.shape == (8, 8)
    npt.assert_allclose(output.max(), 0.7, rtol=1e-6)


def test_preprocess_crops_to_the_bright_region():
    image = numpy.zeros((32, 32))
    image[8:24, 4:12] = 0.5
    npt.assert_allclose(preprocess(image), numpy.full((32, 32), 0.5), rtol=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_preprocess_is_idempotent(seed):
    rng = numpy.random.default_rng(seed)
    image = numpy.zeros((1, 64, 64))
    top, left = rng.integers(0, 20, size=2)
    bottom, right = rng.integers(40, 64, size=2)
    image[0, top:bottom, left:right] = rng.uniform(0.3, 1.0, size=(bottom - top, right - left))
    once = preprocess(image)
    npt.assert_allclose(preprocess(once), once, atol=1e-6)
    assert numpy.all((once == 0) | (once >= DEFAULT_THRESHOLD))


def test_identity_augmentation_keeps_the_image():
    image = numpy.random.default_rng(1).uniform(size=(1, 32, 32))
    npt.assert_allclose(apply_augmentation(image, AugmentationParameters.identity()), image,
                        atol=1e-6)


@pytest.mark.parametrize("angle", [-20.0, -7.5, 13.0, 20.0])
def test_rotation_keeps_a_centered_blob_centroid(angle):
    rows, columns = numpy.mgrid[0:64, 0:64]
    blob = 0.9 * numpy.exp(-((rows - 31.5) ** 2 + (columns - 31.5) ** 2) / (2 * 4.0 ** 2))
    parameters = AugmentationParameters(angle, (0.0, 0.0), 1.0, 0.0, 0.0, 5.0, 0)
    rotated = apply_augmentation(blob, parameters)
    npt.assert_allclose(center_of_mass(rotated), center_of_mass(blob), atol=1.0)


def test_augmentation_stays_in_range_and_is_seeded():
    image = numpy.random.default_rng(2).uniform(size=(1, 32, 32))
    first = augment(image, 11)
    assert first.min() >= 0.0 and first.max() <= 1.0
    npt.assert_array_equal(first, augment(image, 11))
    assert not numpy.array_equal(first, augment(image, 12))


def test_augmentation_parameters_stay_within_ranges():
    draws = [draw_augmentation(seed) for seed in range(10000)]
    assert all(parameters.within_ranges() for parameters in draws)
    assert max(abs(parameters.rotation) for parameters in draws) <= MAX_ROTATION
    assert max(abs(parameters.shear) for parameters in draws) <= MAX_SHEAR
    assert max(max(abs(value) for value in parameters.translation)
               for parameters in draws) <= MAX_TRANSLATION
    scales = [parameters.scale for parameters in draws]
    assert SCALE_RANGE[0] <= min(scales) and max(scales) <= SCALE_RANGE[1]
    assert all(parameters.alpha == 10.0 and parameters.sigma == 5.0 for parameters in draws)


def test_oracle_needs_enough_samples():
    with pytest.raises(ValueError):
        bayes_auc_oracle(_config(), n_mc=9999)


def test_oracle_without_metadata_signal():
    report = bayes_auc_oracle(_config(metadata_shift=0.0), n_mc=20000)
    assert abs(report.auc_joint - report.auc_image_only) <= 0.01


def test_oracle_default_gap():
    report = bayes_auc_oracle(_config(), n_mc=100000)
    assert report.gap > 0.05
    assert 0.5 < report.auc_image_only < report.auc_joint < 1.0


def test_oracle_separable_limit():
    cfg = _config(p_pos=0.5, strong_probability=1.0, strong_amplitude_mean=5.0,
                  strong_amplitude_sd=0.01, distractor_probability=0.0, texture_amplitude=0.01)
    report = bayes_auc_oracle(cfg, n_mc=10000)
    assert report.auc_image_only > 0.999
    assert report.auc_joint > 0.999


@pytest.mark.slow
def test_oracle_gap_is_reproducible_across_seeds():
    cfg = _config()
    first = bayes_auc_oracle(cfg, n_mc=100000, seed=1)
    second = bayes_auc_oracle(cfg, n_mc=100000, seed=2)
    assert abs(first.gap - second.gap) <= 0.01


def test_dataset_round_trip(tmp_path):
    cfg = _config(n_samples=50)
    generate_dataset(cfg, tmp_path)
    assert sorted(path.name for path in tmp_path.iterdir()) == sorted(DATASET_FILES)

    dataset = load_dataset(tmp_path)
    samples = generate_samples(cfg)
    assert len(dataset) == 50
    npt.assert_array_equal(dataset.images[3], samples[3].image)
    assert dataset.records[3] == samples[3].record
    assert dataset.labels["malignancy"].tolist() == [sample.label_malignancy
                                                     for sample in samples]
    assert dataset.config_hash == cfg.config_hash

    indices = numpy.concatenate([dataset.splits[name] for name in ("train", "validation",
                                                                   "test")])
    assert sorted(indices.tolist()) == list(range(50))
    assert len(dataset.splits["test"]) == 10


def test_missing_dataset_file(tmp_path):
    generate_dataset(_config(n_samples=10), tmp_path)
    (tmp_path / "splits.json").unlink()
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path)


def test_service_reports_configuration_errors(tmp_path):
    service = DataSynthesisService(tmp_path, overrides={"task": "density"})
    assert service.start() is False
    assert service.configuration_error

    service = DataSynthesisService(tmp_path, overrides={"n_samples": 30,
                                                        "oracle_samples": 10000})
    assert service.start() is True
    assert load_dataset(tmp_path).oracle["n_mc"] == 10000
