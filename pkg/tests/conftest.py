import pytest

from cmine import PipelineConfig, build_pipeline
from cmine.knowledge_source import ConceptRecord, mini_thesaurus_path

_criteria: dict[int, tuple[str, list[str]]] = {}


@pytest.fixture(scope="session")
def mini_path():
    return mini_thesaurus_path()


@pytest.fixture(scope="session")
def mini_pipeline(mini_path):
    return build_pipeline(mini_path)


@pytest.fixture(scope="session")
def superset_pipeline(mini_path):
    return build_pipeline(mini_path, config=PipelineConfig(superset_only=True))


@pytest.fixture
def write_kb(tmp_path):
    def _write(rows, name="kb.tsv"):
        path = tmp_path / name
        path.write_text("".join("\t".join(r) + "\n" for r in rows), encoding="utf-8")
        return path
    return _write


def records(rows):
    return [ConceptRecord(*r) for r in rows]


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None and (report.when == "call" or report.outcome != "passed"):
        number, title = marker.args
        _, outcomes = _criteria.setdefault(number, (title, []))
        outcomes.append(report.outcome)
    return report


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, outcomes = _criteria[number]
        ok = outcomes and all(o == "passed" for o in outcomes)
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
