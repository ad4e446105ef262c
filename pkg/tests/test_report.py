import json
import re
from collections import Counter

import pytest

from cephkit.report import (
    CATEGORY_ORDER,
    FORMAT_MARKDOWN,
    FORMAT_STRUCTURED,
    FORMAT_TEXT,
    LANGUAGES,
    EmptyInstructionSet,
    InstructionSet,
    MissingMeasurement,
    MissingTemplate,
    Templates,
    build_prompt,
    compose_report,
    default_instructions,
    default_templates,
    derive_findings,
    format_reference_suffix,
    format_value,
    render_report,
)
from cephkit.steiner import (
    ClassificationThresholds,
    MeasurementResult,
    NormEntry,
    NormTable,
    SkeletalClassification,
    classify,
    compute_all,
    grade,
)
from conftest import FIXTURE_DIR, FIXTURE_NAMES, load_fixture_set

ROW_1 = [84.41, 85.7, -1.29, 61.28, 28.03, 94.25, 6.34, 6.6, 0.08]
ROW_2 = [84.54, 84.27, 0.27, 58.64, 26.6, 89.64, 6.18, 8.91, -3.56]
ROW_3 = [80.01, 73.87, 6.14, 63.03, 31.03, 96.67, 0.41, 11.55, -0.94]
BATTERY = ["SNA", "SNB", "ANB", "YAXIS", "MPFH", "FACIAL", "U1NA_MM", "L1NB_MM", "POGNB_MM"]


def battery_results(values):
    units = {"U1NA_MM": "mm", "L1NB_MM": "mm", "POGNB_MM": "mm"}
    return [
        MeasurementResult(mid, v, units.get(mid, "deg"), ()) for mid, v in zip(BATTERY, values)
    ]


class TestFormatValue:
    @pytest.mark.parametrize(
        "value,expected",
        [
            (84.41, "84.41"),
            (85.70, "85.7"),
            (0.08, "0.08"),
            (6.60, "6.6"),
            (2.00, "2"),
            (-3.56, "-3.56"),
            (-1.29, "-1.29"),
            (0.0, "0"),
            (-0.001, "0"),
            (0.005, "0.01"),
            (2.675, "2.68"),
            (127.4999999402616, "127.5"),
            (-0.94, "-0.94"),
        ],
    )
    def test_examples(self, value, expected):
        assert format_value(value) == expected


class TestReferenceSuffix:
    def test_row1_english_verbatim(self):
        suffix = format_reference_suffix(battery_results(ROW_1), "en")
        assert suffix == (
            "\nReference measurements: SNA angle: 84.41, SNB angle: 85.7, "
            "ANB angle: -1.29, Y-axis angle: 61.28, MP-FH angle: 28.03, "
            "facial angle: 94.25, U1-NA distance: 6.34, L1-NB distance: 6.6, "
            "Po-NB distance: 0.08"
        )

    def test_row1_chinese_verbatim(self):
        suffix = format_reference_suffix(battery_results(ROW_1), "zh")
        assert suffix == (
            "\n 参考指标:SNA 角:84.41,SNB 角:85.7,ANB 角:-1.29,Y 轴角:61.28,"
            "MP-FH 角:28.03,面 角:94.25,U1-NA 距离:6.34,L1-NB 距离:6.6,Po-NB 距离:0.08"
        )

    def test_trailing_zero_strip(self):
        suffix = format_reference_suffix(battery_results(ROW_1), "en")
        assert "L1-NB distance: 6.6" in suffix
        assert "6.60" not in suffix
        assert "85.70" not in suffix

    def test_missing_measurement(self):
        rows = battery_results(ROW_1)[:-1]
        with pytest.raises(MissingMeasurement) as exc:
            format_reference_suffix(rows, "en")
        assert exc.value.measurement_id == "POGNB_MM"


PROMPT_RE = re.compile(
    r"\A###Doctor: ?(?P<token><[^<>]+>)(?P<instruction>.+?)"
    r"(?P<suffix>\n.+)###Assistant: ?\Z",
    re.DOTALL,
)


class TestBuildPrompt:
    def test_deterministic(self):
        a = build_prompt(battery_results(ROW_2), "en", seed=1234)
        b = build_prompt(battery_results(ROW_2), "en", seed=1234)
        assert a == b
        assert a.text == b.text

    def test_single_instruction_always_chosen(self):
        instructions = InstructionSet(by_lang={"en": ("Only one.",), "zh": ("唯一。",)})
        for seed in (0, 1, 17, 2**63, -5):
            p = build_prompt(battery_results(ROW_1), "en", seed, instructions=instructions)
            assert p.instruction_index == 0
            assert "Only one." in p.text

    def test_row3_values_in_suffix(self):
        p = build_prompt(battery_results(ROW_3), "en", seed=7)
        assert "ANB angle: 6.14" in p.text
        assert "Po-NB distance: -0.94" in p.text

    def test_grammar(self):
        for seed in range(50):
            p = build_prompt(battery_results(ROW_1), "en", seed)
            m = PROMPT_RE.match(p.text)
            assert m is not None, p.text
            assert m.group("token") == "<ImageFeature>"
            assert m.group("instruction") in default_instructions().for_lang("en")

    def test_empty_instruction_set(self):
        with pytest.raises(EmptyInstructionSet):
            build_prompt(
                battery_results(ROW_1), "en", 1, instructions=InstructionSet(by_lang={"en": ()})
            )

    def test_uniform_choice(self):
        n = len(default_instructions().for_lang("en"))
        counts = Counter(
            build_prompt(battery_results(ROW_1), "en", seed).instruction_index
            for seed in range(30000)
        )
        for idx in range(n):
            assert abs(counts[idx] / 30000 - 1 / n) < 0.01


def case_findings(name):
    s = load_fixture_set(name)
    results, _ = compute_all(s)
    from cephkit.ingest import default_norms

    deviations = grade(results, default_norms())
    classification = classify(results, ClassificationThresholds())
    return results, derive_findings(results, deviations, classification)


class TestDeriveFindings:
    def test_all_normal_renders_no_abnormality(self):
        results, findings = case_findings("synthetic_case_01")
        assert all(f.subkey in ("NORMAL", "CLASS_I", "AVERAGE") for f in findings)
        text = render_report(findings, "en", FORMAT_TEXT, results=results)
        assert "within normal limits" in text

    def test_class_ii_protrusion_phrase(self):
        results, findings = case_findings("synthetic_case_02")
        keys = [f.key for f in findings]
        assert "MAXILLA/HIGH" in keys and "SAGITTAL_CLASS/CLASS_II" in keys
        text = render_report(findings, "en", FORMAT_TEXT, results=results)
        assert "Maxillary protrusion, skeletal Class II malocclusion" in text

    @pytest.mark.parametrize("name", FIXTURE_NAMES)
    def test_fixture_findings_match_committed_expectation(self, name):
        _, findings = case_findings(name)
        expected = json.loads(
            (FIXTURE_DIR / f"{name}.findings.json").read_text(encoding="utf-8")
        )["expected_finding_keys"]
        assert [f.key for f in findings] == expected

    def test_category_order(self):
        _, findings = case_findings("synthetic_case_03")
        positions = [CATEGORY_ORDER.index(f.category) for f in findings]
        assert positions == sorted(positions)

    def test_unavailable_measurements_omitted(self):
        findings = derive_findings([], [], SkeletalClassification(None, None, ClassificationThresholds()))
        assert findings == []


class TestRenderReport:
    def test_empty_findings_statement(self):
        text = render_report([], "en", FORMAT_TEXT)
        assert "within normal limits" in text

    def test_deterministic(self):
        results, findings = case_findings("synthetic_case_02")
        a = render_report(findings, "en", FORMAT_TEXT, results=results)
        b = render_report(findings, "en", FORMAT_TEXT, results=results)
        assert a == b

    def test_markdown_and_structured(self):
        results, findings = case_findings("synthetic_case_02")
        md = render_report(findings, "en", FORMAT_MARKDOWN, results=results)
        assert md.startswith("# ")
        structured = render_report(findings, "en", FORMAT_STRUCTURED, results=results)
        assert structured["diagnosis"] and structured["recommendations"]
        assert len(structured["measurements"]) == len(results)

    def test_zh_report(self):
        results, findings = case_findings("synthetic_case_02")
        text = render_report(findings, "zh", FORMAT_TEXT, results=results)
        assert "骨性II类错颌" in text
        assert "上颌前突" in text

    def test_battery_values_echo_exactly_once(self):
        results, findings = case_findings("synthetic_case_01")
        text = render_report(findings, "en", FORMAT_TEXT, results=results)
        echo_lines = [ln for ln in text.splitlines() if ln.startswith("- ")]
        rendered = [ln.split(": ", 1)[1].rsplit(" ", 1)[0] for ln in echo_lines]
        from cephkit.report import format_value as fv

        for r in results:
            assert rendered.count(fv(r.value)) >= 1
        assert len(echo_lines) == len(results)

    def test_diagnosis_nonempty_when_findings_nonempty(self):
        for name in FIXTURE_NAMES:
            results, findings = case_findings(name)
            report = compose_report(findings, "en", results=results)
            assert findings
            assert report.diagnosis_lines
            assert report.recommendations

    def test_missing_template_error(self):
        t = Templates(tables={"en": {}, "zh": {}})
        results, findings = case_findings("synthetic_case_01")
        with pytest.raises(MissingTemplate):
            render_report(findings, "en", FORMAT_TEXT, results=results, templates=t)

    def test_bad_format_and_lang(self):
        with pytest.raises(ValueError):
            render_report([], "en", "pdf")
        with pytest.raises(ValueError):
            render_report([], "fr")


class TestTemplateTotality:
    def test_every_finding_key_in_both_languages(self):
        t = default_templates()
        subkeys = {
            "MAXILLA": ("LOW", "NORMAL", "HIGH"),
            "MANDIBLE": ("LOW", "NORMAL", "HIGH"),
            "SAGITTAL_CLASS": ("CLASS_I", "CLASS_II", "CLASS_III"),
            "VERTICAL": ("LOW_ANGLE", "AVERAGE", "HIGH_ANGLE"),
            "CHIN": ("LOW", "NORMAL", "HIGH"),
            "UPPER_INCISOR": ("LOW", "NORMAL", "HIGH"),
            "LOWER_INCISOR": ("LOW", "NORMAL", "HIGH"),
            "INTERINCISAL": ("LOW", "NORMAL", "HIGH"),
        }
        for lang in LANGUAGES:
            for category, subs in subkeys.items():
                for sub in subs:
                    assert t.has(f"{category}/{sub}", lang), (category, sub, lang)

    def test_instruction_sets_nonempty(self):
        inst = default_instructions()
        for lang in LANGUAGES:
            assert len(inst.for_lang(lang)) >= 3
