"""Provider gateway: mock scripting, schema validation, retries."""

import json

import pytest

from themecanvas.errors import EngineError
from themecanvas.provider import (
    PromptRequest,
    ProviderClient,
    ProviderConfig,
    script_key,
)

NAME_REQUEST = PromptRequest(
    template_id="name/1",
    variables={"theme_name": "T", "evidence": "query latency"},
    response_schema_id="name/1",
)

GOOD = json.dumps({"name": "Index Maintenance", "rationale": "shared wording"})
BAD = "not json at all"


def client(max_retries: int = 2) -> ProviderClient:
    return ProviderClient(ProviderConfig(mode="mock", max_retries=max_retries))


class TestMockScripts:
    def test_template_keyed_script(self):
        provider = client()
        provider.register_mock_script("name/1", [GOOD])
        parsed = provider.complete_structured(NAME_REQUEST)
        assert parsed["name"] == "Index Maintenance"

    def test_variables_digest_key_takes_precedence(self):
        provider = client()
        exact = script_key("name/1", NAME_REQUEST.variables)
        provider.register_mock_script("name/1", [json.dumps({"name": "B", "rationale": "r"})])
        provider.register_mock_script(exact, [json.dumps({"name": "A", "rationale": "r"})])
        assert provider.complete_structured(NAME_REQUEST)["name"] == "A"
        assert provider.complete_structured(NAME_REQUEST)["name"] == "B"

    def test_bad_then_good_uses_retry(self):
        provider = client(max_retries=1)
        provider.register_mock_script("name/1", [BAD, GOOD])
        assert provider.complete_structured(NAME_REQUEST)["name"] == "Index Maintenance"

    def test_retries_exhausted(self):
        provider = client(max_retries=1)
        provider.register_mock_script("name/1", [BAD, BAD])
        with pytest.raises(EngineError) as err:
            provider.complete_structured(NAME_REQUEST)
        assert err.value.code == "schema_violation_exhausted"

    def test_consuming_past_end(self):
        provider = client()
        provider.register_mock_script("name/1", [GOOD])
        provider.complete_structured(NAME_REQUEST)
        with pytest.raises(EngineError) as err:
            provider.complete_structured(NAME_REQUEST)
        assert err.value.code == "provider_unreachable"

    def test_empty_script(self):
        with pytest.raises(EngineError) as err:
            client().complete_structured(NAME_REQUEST)
        assert err.value.code == "provider_unreachable"

    def test_register_in_live_mode(self):
        live = ProviderClient(ProviderConfig(mode="live", endpoint="http://example.test"))
        with pytest.raises(EngineError) as err:
            live.register_mock_script("name/1", [GOOD])
        assert err.value.code == "not_in_mock_mode"

    def test_dict_responses_allowed(self):
        provider = client()
        provider.register_mock_script("name/1", [{"name": "Direct", "rationale": "r"}])
        assert provider.complete_structured(NAME_REQUEST)["name"] == "Direct"

    def test_replay_determinism(self):
        responses = [
            json.dumps({"name": f"N{i}", "rationale": "r"}) for i in range(5)
        ]
        outputs = []
        for _ in range(2):
            provider = client()
            provider.register_mock_script("name/1", list(responses))
            outputs.append(
                [provider.complete_structured(NAME_REQUEST)["name"] for _ in range(5)]
            )
        assert outputs[0] == outputs[1] == ["N0", "N1", "N2", "N3", "N4"]


class TestValidation:
    def test_schema_enforced(self):
        provider = client(max_retries=0)
        provider.register_mock_script("name/1", [json.dumps({"name": "x" * 61, "rationale": "r"})])
        with pytest.raises(EngineError) as err:
            provider.complete_structured(NAME_REQUEST)
        assert err.value.code == "schema_violation_exhausted"

    def test_unknown_template(self):
        with pytest.raises(EngineError) as err:
            client().complete_structured(
                PromptRequest("nope/1", {}, "name/1")
            )
        assert err.value.code == "validation_error"

    def test_unknown_schema(self):
        with pytest.raises(EngineError) as err:
            client().complete_structured(
                PromptRequest("name/1", dict(NAME_REQUEST.variables), "nope/1")
            )
        assert err.value.code == "validation_error"

    def test_missing_template_variable(self):
        provider = client()
        provider.register_mock_script("name/1", [GOOD])
        with pytest.raises(EngineError) as err:
            provider.complete_structured(
                PromptRequest("name/1", {"theme_name": "T"}, "name/1")
            )
        assert err.value.code == "validation_error"
        assert "evidence" in err.value.message

    def test_bad_config_rejected(self):
        with pytest.raises(EngineError):
            ProviderConfig(mode="weird")
        with pytest.raises(EngineError):
            ProviderConfig(max_retries=-1)

    def test_per_template_retry_override(self):
        provider = ProviderClient(
            ProviderConfig(
                mode="mock",
                max_retries=0,
                template_overrides={"name/1": {"max_retries": 1}},
            )
        )
        provider.register_mock_script("name/1", [BAD, GOOD])
        assert provider.complete_structured(NAME_REQUEST)["name"] == "Index Maintenance"


class TestNoNetworkInMockMode:
    def test_mock_calls_open_no_sockets(self, no_network):
        provider = client()
        provider.register_mock_script("name/1", [GOOD])
        provider.complete_structured(NAME_REQUEST)
