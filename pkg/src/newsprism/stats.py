"""Survey instrument and statistics kernel.

Paired t-tests, Bonferroni correction, 2 x n mixed ANOVA, and p-values
through an in-repo regularized incomplete beta (continued fractions). All
p-values are two-sided.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IntegrityError, ParseError
from .feed import consumption_report

EC_QUESTIONS_PRE = (
    "How often do you read something you DISAGREE with?",
    "Have you ever checked a news source that is DIFFERENT from what you normally read?",
    "Do you try to CONFIRM information you find by searching online for another source?",
    "Do you try to confirm information by checking a major OFFLINE news medium?",
    "Thinking about recent searches you have performed online using a search engine, "
    "how often have you discovered something that CHANGED your opinion on an issue?",
)

EC_QUESTIONS_POST = (
    "How often will you read something you DISAGREE with?",
    "Will you check a news source that is DIFFERENT from what you normally read?",
    "Will you try to CONFIRM information you find by searching online for another source?",
    "Will you try to confirm information by checking a major OFFLINE news medium?",
    "How often will you discover something that CHANGES your opinion on an issue?",
)

AGE_BANDS = ("19-29", "30-39", "40-49")
PHASES = ("pre", "post")

# star ladder: base alpha, alpha/5, alpha/50 (0.05 / 0.01 / 0.001 by default)
STAR_LEVELS = ("*", "**", "***")


def ec_questions(phase: str):
    """The five echo-chamber questions, exact wording, order Q1..Q5."""
    if phase == "pre":
        return EC_QUESTIONS_PRE
    if phase == "post":
        return EC_QUESTIONS_POST
    raise ValueError(f"phase must be 'pre' or 'post', got {phase!r}")


@dataclass(frozen=True)
class Demographics:
    gender: str
    age_band: str
    political_interest: int
    political_stance: int
    media_usage: int

    def __post_init__(self):
        if self.age_band not in AGE_BANDS:
            raise IntegrityError(f"unknown age band {self.age_band!r}")
        for name in ("political_interest", "political_stance", "media_usage"):
            v = getattr(self, name)
            if not (isinstance(v, int) and 1 <= v <= 5):
                raise IntegrityError(f"{name} must be a Likert integer 1..5, got {v!r}")

    def to_json(self):
        return {
            "gender": self.gender,
            "age_band": self.age_band,
            "political_interest": self.political_interest,
            "political_stance": self.political_stance,
            "media_usage": self.media_usage,
        }


@dataclass(frozen=True)
class SurveyRecord:
    participant_id: str
    phase: str
    answers: tuple[int, int, int, int, int]
    demographics: Demographics | None = None

    def __post_init__(self):
        if self.phase not in PHASES:
            raise IntegrityError(f"phase must be pre or post, got {self.phase!r}")
        if len(self.answers) != 5:
            raise IntegrityError("a survey record answers exactly 5 questions")
        for a in self.answers:
            if not (isinstance(a, int) and 1 <= a <= 5):
                raise IntegrityError(f"Likert answers must be integers 1..5, got {a!r}")
        object.__setattr__(self, "answers", tuple(self.answers))

    def to_json(self):
        obj = {
            "participant": self.participant_id,
            "phase": self.phase,
            "answers": list(self.answers),
        }
        if self.demographics is not None:
            obj["demographics"] = self.demographics.to_json()
        return obj

    @classmethod
    def from_json(cls, obj, line_no=None):
        try:
            demo = obj.get("demographics")
            return cls(
                participant_id=str(obj["participant"]),
                phase=str(obj["phase"]),
                answers=tuple(int(a) for a in obj["answers"]),
                demographics=Demographics(**demo) if demo else None,
            )
        except (KeyError, TypeError, ValueError, IntegrityError) as exc:
            raise ParseError(f"bad survey record: {exc}", line_no) from exc


def ec_score(record: SurveyRecord) -> float:
    """Unweighted mean of the five Likert answers."""
    return sum(record.answers) / 5.0


@dataclass(frozen=True)
class DemoGroups:
    stance: str
    interest: str
    crossed: str


_STANCE_BUCKETS = {1: "liberal", 2: "liberal", 3: "moderate", 4: "conservative", 5: "conservative"}
_INTEREST_BUCKETS = {1: "low", 2: "low", 3: "middle", 4: "high", 5: "high"}
_INTEREST_LETTER = {"low": "L", "middle": "M", "high": "H"}


def group_demographics(record: SurveyRecord) -> DemoGroups:
    """Bucket raw Likert demographics: 1-2 / 3 / 4-5."""
    if record.demographics is None:
        raise IntegrityError(f"record {record.participant_id}/{record.phase} has no demographics")
    d = record.demographics
    stance = _STANCE_BUCKETS[d.political_stance]
    interest = _INTEREST_BUCKETS[d.political_interest]
    neutrality = "N" if stance == "moderate" else "NN"
    return DemoGroups(
        stance=stance,
        interest=interest,
        crossed=f"{_INTEREST_LETTER[interest]}+{neutrality}",
    )


# ---------------------------------------------------------------------------
# special functions


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction of the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 3e-16:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError(f"a and b must be positive, got a={a}, b={b}")
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_pref = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    pref = math.exp(ln_pref)
    if x < (a + 1.0) / (a + b + 2.0):
        return pref * _betacf(a, b, x) / a
    return 1.0 - pref * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t."""
    if df <= 0:
        raise ValueError("df must be positive")
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def f_tail_p(f: float, df1: float, df2: float) -> float:
    """Upper tail probability of the F distribution."""
    if f < 0:
        raise ValueError("F statistic cannot be negative")
    return incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


# ---------------------------------------------------------------------------
# tests


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: float | tuple[float, float]
    p_value: float
    significant_at: str | None = None
    degenerate: bool = False
    detail: dict = field(default_factory=dict, compare=False)

    def starred(self, stars: str | None) -> "TestResult":
        return TestResult(
            self.statistic, self.df, self.p_value, stars, self.degenerate, self.detail
        )

    def to_json(self):
        df = list(self.df) if isinstance(self.df, tuple) else self.df
        return {
            "statistic": self.statistic,
            "df": df,
            "p": self.p_value,
            "stars": self.significant_at,
            "degenerate": self.degenerate,
        }


def paired_t_test(pre, post) -> TestResult:
    """Two-sided paired t-test on (post - pre) with sample sd, df = n - 1."""
    pre = [float(v) for v in pre]
    post = [float(v) for v in post]
    if len(pre) != len(post):
        raise ValueError("pre and post must pair up")
    n = len(pre)
    if n < 2:
        raise ValueError("need at least 2 pairs")
    diffs = [b - a for a, b in zip(pre, post)]
    mean_d = sum(diffs) / n
    var = sum((d - mean_d) ** 2 for d in diffs) / (n - 1)
    df = n - 1
    if var == 0.0:
        if mean_d == 0.0:
            return TestResult(statistic=0.0, df=df, p_value=1.0)
        return TestResult(
            statistic=math.copysign(math.inf, mean_d), df=df, p_value=0.0, degenerate=True
        )
    t = mean_d / math.sqrt(var / n)
    return TestResult(statistic=t, df=df, p_value=t_two_sided_p(t, df))


def bonferroni(alpha: float, m: int) -> float:
    """Corrected per-test threshold alpha / m."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    return alpha / m


def star_for(p: float, m: int, alpha: float = 0.05) -> str | None:
    """Star level after an m-way Bonferroni correction of the alpha ladder."""
    ladder = (alpha * 0.02, alpha * 0.2, alpha)  # ***, **, *
    for threshold, stars in zip(ladder, reversed(STAR_LEVELS)):
        if p < bonferroni(threshold, m):
            return stars
    return None


def mixed_anova(scores, groups) -> TestResult:
    """Group x phase interaction F of a 2 x n mixed design.

    `scores` pairs each participant's (pre, post); `groups` gives the
    between-subjects label per participant. The full decomposition, including
    both main effects, rides along in `detail`.
    """
    scores = [(float(a), float(b)) for a, b in scores]
    groups = list(groups)
    if len(scores) != len(groups):
        raise ValueError("scores and groups must align")
    n = len(scores)
    labels = sorted(set(groups))
    if len(labels) < 2:
        raise ValueError("need at least 2 groups")
    members = {g: [i for i, lab in enumerate(groups) if lab == g] for g in labels}
    for g, idx in members.items():
        if len(idx) < 2:
            raise ValueError(f"group {g!r} has fewer than 2 participants")

    g_count = len(labels)
    all_vals = [v for pair in scores for v in pair]
    grand = sum(all_vals) / (2 * n)
    subj_mean = [(a + b) / 2.0 for a, b in scores]
    group_mean = {g: sum(subj_mean[i] for i in idx) / len(idx) for g, idx in members.items()}
    phase_mean = [sum(s[t] for s in scores) / n for t in (0, 1)]
    cell_mean = {
        (g, t): sum(scores[i][t] for i in idx) / len(idx)
        for g, idx in members.items()
        for t in (0, 1)
    }

    ss_between_subj = 2.0 * sum((m - grand) ** 2 for m in subj_mean)
    ss_group = sum(2.0 * len(idx) * (group_mean[g] - grand) ** 2 for g, idx in members.items())
    ss_subj_within = ss_between_subj - ss_group
    ss_within_subj = sum(
        (scores[i][t] - subj_mean[i]) ** 2 for i in range(n) for t in (0, 1)
    )
    ss_phase = n * sum((pm - grand) ** 2 for pm in phase_mean)
    ss_inter = sum(
        len(idx) * (cell_mean[(g, t)] - group_mean[g] - phase_mean[t] + grand) ** 2
        for g, idx in members.items()
        for t in (0, 1)
    )
    ss_err_within = ss_within_subj - ss_phase - ss_inter

    df1, df2 = g_count - 1, n - g_count
    ms_err = ss_err_within / df2 if df2 > 0 else 0.0
    ms_subj = ss_subj_within / df2 if df2 > 0 else 0.0

    def f_result(ss, d1) -> TestResult:
        if ms_err <= 0.0:
            if ss <= 1e-12:
                return TestResult(0.0, (d1, df2), 1.0)
            return TestResult(math.inf, (d1, df2), 0.0, degenerate=True)
        f = (ss / d1) / ms_err
        return TestResult(f, (d1, df2), f_tail_p(f, d1, df2))

    interaction = f_result(ss_inter, df1)
    phase_eff = f_result(ss_phase, 1)
    if ms_subj <= 0.0:
        group_eff = TestResult(0.0 if ss_group <= 1e-12 else math.inf, (df1, df2),
                               1.0 if ss_group <= 1e-12 else 0.0,
                               degenerate=ss_group > 1e-12)
    else:
        f_g = (ss_group / df1) / ms_subj
        group_eff = TestResult(f_g, (df1, df2), f_tail_p(f_g, df1, df2))

    detail = {
        "groups": labels,
        "phase": phase_eff,
        "group": group_eff,
        "ss": {
            "group": ss_group,
            "subjects_within": ss_subj_within,
            "phase": ss_phase,
            "interaction": ss_inter,
            "error_within": ss_err_within,
        },
    }
    return TestResult(
        interaction.statistic,
        interaction.df,
        interaction.p_value,
        degenerate=interaction.degenerate,
        detail=detail,
    )


def posthoc_paired(groups, alpha: float = 0.05, m: int | None = None):
    """Per-group paired t-tests with Bonferroni stars.

    `groups` maps label -> (pre, post); `m` overrides the correction family
    size (defaults to the number of groups).
    """
    if m is None:
        m = len(groups)
    results = {}
    for label in sorted(groups):
        pre, post = groups[label]
        r = paired_t_test(pre, post)
        results[label] = r.starred(star_for(r.p_value, m, alpha))
    return results


# ---------------------------------------------------------------------------
# survey persistence


def save_surveys(records, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json(), ensure_ascii=False) + "\n")


def append_survey(record: SurveyRecord, path) -> None:
    path = Path(path)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def load_surveys(path):
    path = Path(path)
    records = []
    seen = set()
    if not path.exists():
        return records
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
            rec = SurveyRecord.from_json(obj, line_no)
            key = (rec.participant_id, rec.phase)
            if key in seen:
                raise IntegrityError(f"duplicate survey record for {key} (line {line_no})")
            seen.add(key)
            records.append(rec)
    return records


# ---------------------------------------------------------------------------
# study report


def _paired_records(records):
    """Participants with exactly one pre and one post record."""
    by_participant: dict[str, dict[str, SurveyRecord]] = {}
    for r in records:
        slot = by_participant.setdefault(r.participant_id, {})
        if r.phase in slot:
            raise IntegrityError(f"duplicate {r.phase} record for {r.participant_id}")
        slot[r.phase] = r
    pairs = {
        pid: (slots["pre"], slots["post"])
        for pid, slots in by_participant.items()
        if "pre" in slots and "post" in slots
    }
    return dict(sorted(pairs.items()))


def participant_stances(records) -> dict[str, str]:
    """Declared binary stance per participant from pre-survey demographics."""
    out = {}
    for r in records:
        if r.phase == "pre" and r.demographics is not None:
            out[r.participant_id] = group_demographics(r).stance
    return out


def compose_study_report(
    survey_records,
    events=(),
    article_stances=None,
    alpha: float = 0.05,
    count_kind: str = "article_open",
) -> dict:
    """The full study report: per-question t-tests, demographic ANOVAs, consumption.

    The question family is Bonferroni-corrected at m = 6 (five questions plus
    the mean); each demographic axis corrects its post-hoc tests at
    m = groups + 1, counting the omnibus test in the family.
    """
    pairs = _paired_records(survey_records)
    if len(pairs) < 2:
        raise IntegrityError(f"report needs at least 2 complete pre/post pairs, have {len(pairs)}")
    pids = list(pairs)

    m_questions = 6
    questions = []
    for qi in range(5):
        pre_vals = [pairs[p][0].answers[qi] for p in pids]
        post_vals = [pairs[p][1].answers[qi] for p in pids]
        r = paired_t_test(pre_vals, post_vals)
        questions.append(
            {
                "question": f"Q{qi + 1}",
                "pre_wording": EC_QUESTIONS_PRE[qi],
                "post_wording": EC_QUESTIONS_POST[qi],
                "pre_mean": sum(pre_vals) / len(pre_vals),
                "post_mean": sum(post_vals) / len(post_vals),
                **r.starred(star_for(r.p_value, m_questions, alpha)).to_json(),
            }
        )
    pre_scores = {p: ec_score(pairs[p][0]) for p in pids}
    post_scores = {p: ec_score(pairs[p][1]) for p in pids}
    mean_r = paired_t_test([pre_scores[p] for p in pids], [post_scores[p] for p in pids])
    mean_entry = {
        "question": "mean",
        "pre_mean": sum(pre_scores.values()) / len(pids),
        "post_mean": sum(post_scores.values()) / len(pids),
        **mean_r.starred(star_for(mean_r.p_value, m_questions, alpha)).to_json(),
    }

    def axis_label(pid, axis):
        demo_groups = group_demographics(pairs[pid][0])
        if axis == "age":
            return pairs[pid][0].demographics.age_band
        return getattr(demo_groups, axis)

    anova = {}
    for axis in ("age", "stance", "interest", "crossed"):
        labels = {p: axis_label(p, axis) for p in pids}
        counts: dict[str, int] = {}
        for lab in labels.values():
            counts[lab] = counts.get(lab, 0) + 1
        usable = len(counts) >= 2 and all(c >= 2 for c in counts.values())
        entry: dict = {"groups": counts}
        if usable:
            scores = [(pre_scores[p], post_scores[p]) for p in pids]
            omnibus = mixed_anova(scores, [labels[p] for p in pids])
            m_axis = len(counts) + 1
            posthoc = posthoc_paired(
                {
                    lab: (
                        [pre_scores[p] for p in pids if labels[p] == lab],
                        [post_scores[p] for p in pids if labels[p] == lab],
                    )
                    for lab in counts
                },
                alpha,
                m=m_axis,
            )
            entry.update(
                interaction=omnibus.to_json(),
                phase=omnibus.detail["phase"].to_json(),
                group=omnibus.detail["group"].to_json(),
                posthoc={lab: r.to_json() for lab, r in posthoc.items()},
                bonferroni_m=m_axis,
                thresholds={
                    "*": bonferroni(alpha, m_axis),
                    "**": bonferroni(alpha * 0.2, m_axis),
                    "***": bonferroni(alpha * 0.02, m_axis),
                },
            )
        else:
            entry["skipped"] = "every group needs at least 2 participants"
        anova[axis] = entry

    report = {
        "n_pairs": len(pids),
        "alpha": alpha,
        "bonferroni": {
            "m": m_questions,
            "thresholds": {
                "*": bonferroni(alpha, m_questions),
                "**": bonferroni(alpha * 0.2, m_questions),
                "***": bonferroni(alpha * 0.02, m_questions),
            },
        },
        "questions": questions,
        "mean": mean_entry,
        "anova": anova,
    }
    if article_stances is not None:
        stances = participant_stances(survey_records)
        report["consumption"] = consumption_report(
            events, {p: stances.get(p) for p in pids}, article_stances, count_kind
        ).to_json()
    return report


def render_report_text(report: dict) -> str:
    """Plain-text table mirroring the report JSON."""
    lines = [f"participants: {report['n_pairs']}  alpha: {report['alpha']}"]
    th = report["bonferroni"]["thresholds"]
    lines.append(
        f"bonferroni m={report['bonferroni']['m']}: "
        f"*p<{th['*']:.5f} **p<{th['**']:.5f} ***p<{th['***']:.5f}"
    )
    lines.append(f"{'question':<9} {'pre':>6} {'post':>6} {'t':>9} {'df':>4} {'p':>10} stars")
    for q in report["questions"] + [report["mean"]]:
        stars = q["stars"] or ""
        lines.append(
            f"{q['question']:<9} {q['pre_mean']:>6.3f} {q['post_mean']:>6.3f} "
            f"{q['statistic']:>9.4f} {q['df']:>4} {q['p']:>10.6f} {stars}"
        )
    for axis, entry in report["anova"].items():
        if "interaction" in entry:
            i = entry["interaction"]
            lines.append(
                f"anova[{axis}] interaction F({i['df'][0]:.0f},{i['df'][1]:.0f})"
                f"={i['statistic']:.4f} p={i['p']:.6f}"
            )
        else:
            lines.append(f"anova[{axis}] skipped: {entry['skipped']}")
    if "consumption" in report:
        c = report["consumption"]
        ratio = "undefined" if c["ratio"] is None else f"{c['ratio'][0]:.2f}:{c['ratio'][1]:.2f}"
        lines.append(
            f"consumption own:opposing = {ratio}  "
            f"articles mean {c['articles_read_mean']:.2f} sd {c['articles_read_sd']:.2f}"
        )
    return "\n".join(lines)
