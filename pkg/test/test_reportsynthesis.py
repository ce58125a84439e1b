"""Module containing the tests of the report synthesis from exam metadata"""
import dataclasses
import numpy
import pytest
from reportsynthesis import MetadataRecord, MetadataValidationError, ReportRenderer, \
    render_report, build_vocab, report_vocabulary, encode_text, tokenize_text, \
    categorical_domains, read_metadata_csv, write_metadata_csv, records_from_frame, \
    PAD_ID, UNK_ID

FULL_RECORD = MetadataRecord(age=54, nationality="german", device_manufacturer="hologic",
                             device_model="selenia dimensions",
                             institution="university hospital", exam_year=2019,
                             breast_density="C", birads=2)

FIELDS = [field.name for field in dataclasses.fields(MetadataRecord)]


def _random_record(rng, missing_rate=0.3):
    domains = categorical_domains()
    values = {"age": int(rng.integers(18, 121)), "exam_year": int(rng.integers(1990, 2101)),
              "birads": int(rng.integers(0, 7))}
    for name, choices in domains.items():
        values[name] = choices[rng.integers(len(choices))]
    return MetadataRecord(**{name: None if rng.random() < missing_rate else value
                             for name, value in values.items()})


@pytest.fixture(scope="module")
def renderer():
    return ReportRenderer()


@pytest.fixture(scope="module")
def vocabulary(renderer):
    return report_vocabulary(renderer)


def test_render_full_record():
    assert render_report(FULL_RECORD) == (
        "a 54 year old patient of german . exam from 2019 at university hospital on a "
        "hologic selenia dimensions device . breast density category c . birads 2 .")


def test_render_without_birads_sentence():
    assert "birads" not in render_report(FULL_RECORD, include_birads=False)


def test_render_missing_age():
    report = render_report(dataclasses.replace(FULL_RECORD, age=None))
    assert "patient of unknown age" in report


def test_render_all_missing(vocabulary):
    report = render_report(MetadataRecord())
    assert report.count("unknown") == len(FIELDS)
    ids, length = encode_text(report, vocabulary, 64)
    assert UNK_ID not in ids[:length]
    assert len(report.split()) <= 64


@pytest.mark.parametrize("field, value", [
    ["age", 17], ["age", 121], ["exam_year", 1989], ["breast_density", "E"],
    ["birads", 7], ["nationality", "martian"], ["institution", ""], ["age", "54"]])
def test_out_of_domain_value_names_the_field(field, value):
    with pytest.raises(MetadataValidationError) as error:
        dataclasses.replace(FULL_RECORD, **{field: value})
    assert error.value.field == field


@pytest.mark.parametrize("field", FIELDS)
def test_missing_field_changes_only_its_sentence(renderer, field):
    before = renderer.render(FULL_RECORD).split(" . ")
    after = renderer.render(dataclasses.replace(FULL_RECORD, **{field: None})).split(" . ")
    assert len(before) == len(after)
    changed = [index for index, (old, new) in enumerate(zip(before, after)) if old != new]
    assert len(changed) == 1


def test_build_vocab_is_deterministic(renderer):
    first = build_vocab(renderer.lexicon(), categorical_domains())
    second = build_vocab(renderer.lexicon(), categorical_domains())
    assert first.token_to_id == second.token_to_id
    assert first.token_of(PAD_ID) == "<pad>" and first.token_of(UNK_ID) == "<unk>"
    assert first.id_to_token[2:] == sorted(first.id_to_token[2:])


def test_build_vocab_with_empty_domains(renderer):
    vocabulary = build_vocab(renderer.lexicon(), {})
    template_tokens = set()
    for text in renderer.lexicon():
        template_tokens.update(tokenize_text(text))
    assert set(vocabulary.id_to_token[2:]) == template_tokens


def test_encode_render_closure_fuzz(vocabulary):
    rng = numpy.random.default_rng(0)
    for _ in range(10000):
        ids, length = encode_text(render_report(_random_record(rng)), vocabulary, 64)
        assert UNK_ID not in ids[:length]


def test_encode_text_examples(vocabulary):
    ids, length = encode_text("unknown age", vocabulary, 4)
    assert ids.tolist() == [vocabulary.id_of("unknown"), vocabulary.id_of("age"), PAD_ID, PAD_ID]
    assert length == 2

    ids, length = encode_text(render_report(FULL_RECORD), vocabulary, 5)
    assert len(ids) == 5 and length == 5
    assert vocabulary.decode(ids) == "a 5 4 year old"

    ids, _ = encode_text("quantum", vocabulary, 2)
    assert ids.tolist() == [UNK_ID, PAD_ID]


def test_tokenize_splits_digits_and_punctuation():
    assert tokenize_text("Exam from 2019.") == ["exam", "from", "2", "0", "1", "9", "."]


def test_metadata_csv_round_trip(tmp_path):
    path = tmp_path / "metadata.csv"
    rows = [dict(FULL_RECORD.to_row(), exam_id="0", image_id="0", label_malignancy=1,
                 label_calcification=0),
            dict(MetadataRecord().to_row(), exam_id="1", image_id="1", label_malignancy=0,
                 label_calcification=0)]
    write_metadata_csv(path, rows)

    assert path.read_text().splitlines()[0] == (
        "exam_id,image_id,age,nationality,device_manufacturer,device_model,institution,"
        "exam_year,breast_density,birads,label_malignancy,label_calcification")
    records = records_from_frame(read_metadata_csv(path))
    assert records == [FULL_RECORD, MetadataRecord()]
