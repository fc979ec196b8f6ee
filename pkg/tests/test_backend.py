import json
import urllib.request
from concurrent.futures import ThreadPoolExecutor

import pytest

from hybridqc.backend import (
    BackendError,
    JobFailed,
    JobNotFound,
    JobRequest,
    JobService,
    LocalBackend,
    RemoteBackend,
)
from hybridqc.circuit import ParseError
from hybridqc.simulator import NoiseModel

BELL = "H 0\nCNOT 0 1\nMEASURE 0 -> 0\nMEASURE 1 -> 1\n"


@pytest.fixture(scope="module")
def service():
    with JobService(workers=4) as svc:
        yield svc


@pytest.fixture
def remote(service):
    return RemoteBackend(service.url)


def test_local_matches_remote(remote):
    req = JobRequest(BELL, 2000, NoiseModel(0.01, 0.02, 0.01), seed=42)
    assert LocalBackend().execute(req) == remote.execute(req)


def test_remote_device(remote, device):
    assert remote.device == device


def test_unseeded_job_records_seed(remote):
    result = remote.execute(JobRequest(BELL, 100))
    assert LocalBackend().execute(JobRequest(BELL, 100, seed=result.seed)) == result


def test_concurrent_jobs(remote):
    requests = [JobRequest(BELL, 500, seed=s) for s in range(16)]
    with ThreadPoolExecutor(16) as pool:
        results = list(pool.map(remote.execute, requests))
    local = LocalBackend()
    assert results == [local.execute(r) for r in requests]
    assert len({tuple(r.bitstrings.ravel()) for r in results}) == 16


def test_status_lifecycle(remote):
    job_id = remote.submit(JobRequest(BELL, 10, seed=1))
    remote.wait(job_id)
    rec = remote.status(job_id)
    assert rec.status == "done" and rec.result.shots == 10


def test_unknown_job_is_404(service, remote):
    with pytest.raises(JobNotFound):
        remote.status("does-not-exist")
    with pytest.raises(urllib.error.HTTPError) as err:
        urllib.request.urlopen(service.url + "/jobs/nope")
    assert err.value.code == 404


@pytest.mark.parametrize("body", [
    {"program": "H 0\nFOO 1", "shots": 10},
    {"program": "H %a\nMEASURE %a -> 0", "shots": 10},
    {"program": "RX(%t) 0\nMEASURE 0 -> 0", "shots": 10},
    {"program": "H 0", "shots": 10},
    {"program": BELL, "shots": 0},
    {"shots": 10},
    [1, 2],
])
def test_malformed_requests_rejected(service, body):
    req = urllib.request.Request(service.url + "/jobs", data=json.dumps(body).encode(), method="POST")
    with pytest.raises(urllib.error.HTTPError) as err:
        urllib.request.urlopen(req)
    assert err.value.code == 400
    assert "error" in json.loads(err.value.read())


def test_remote_validates_before_sending(remote):
    with pytest.raises(ParseError) as err:
        remote.submit(JobRequest("H 0\nBAD", 10))
    assert err.value.line == 2


def test_off_edge_program_refused(remote):
    req = JobRequest("CZ 0 2\nMEASURE 0 -> 0", 10, seed=0)
    with pytest.raises(ValueError, match="edge"):
        LocalBackend().execute(req)
    with pytest.raises(JobFailed, match="edge"):
        remote.execute(req)


def test_off_device_qubit_refused():
    with pytest.raises(ValueError):
        LocalBackend().execute(JobRequest("H 9\nMEASURE 9 -> 0", 10, seed=0))


def test_unreachable_service():
    with pytest.raises(BackendError, match="reach"):
        RemoteBackend("http://127.0.0.1:9", timeout=1).submit(JobRequest(BELL, 1))


def test_default_noise_applies():
    prog = "I 0\nMEASURE 0 -> 0"
    noisy = LocalBackend(default_noise=NoiseModel(readout_flip=1.0))
    assert noisy.execute(JobRequest(prog, 20, seed=0)).frequency("1") == 1.0
    assert noisy.execute(JobRequest(prog, 20, NoiseModel(), seed=0)).frequency("1") == 0.0


def test_request_round_trip():
    req = JobRequest(BELL, 5, NoiseModel(0.1, 0, 0), 3)
    assert JobRequest.from_dict(json.loads(json.dumps(req.to_dict()))) == req
