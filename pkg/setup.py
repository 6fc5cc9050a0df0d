# ------------------------------------------------------------------------------------------------
# Packaging for stnoffload, after the detectron2 / mmdetection setup scripts.
# ------------------------------------------------------------------------------------------------

import os
import re
import subprocess

from setuptools import find_packages, setup

version = "0.1.0"
package_name = "stnoffload"
cwd = os.path.dirname(os.path.abspath(__file__))


def git_sha():
    try:
        return subprocess.check_output(["git", "rev-parse", "HEAD"], cwd=cwd).decode("ascii").strip()
    except Exception:
        return "Unknown"


def write_version_file(sha):
    version_path = os.path.join(cwd, package_name, "version.py")
    with open(version_path, "w") as f:
        f.write(f"__version__ = '{version}'\n")
        f.write(f"git_version = {repr(sha)}\n")


def parse_requirements(fname="requirements.txt", with_version=True):
    """Requirement strings from ``fname``, following ``-r`` includes.

    With ``with_version=False`` the version pins are stripped, leaving bare
    package names.
    """
    path = os.path.join(cwd, fname)
    if not os.path.exists(path):
        return []
    items = []
    with open(path, "r") as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("-r "):
                items.extend(parse_requirements(line.split(" ", 1)[1], with_version))
                continue
            if not with_version:
                line = re.split(r"[<>=!~;]", line, maxsplit=1)[0].strip()
            items.append(line)
    return items


if __name__ == "__main__":
    print(f"Building wheel {package_name}-{version}")

    write_version_file(git_sha())

    setup(
        name=package_name,
        version=version,
        description="satellite-terrestrial task offloading simulator with multi-agent soft actor-critic",
        python_requires=">=3.9",
        install_requires=parse_requirements("requirements.txt"),
        extras_require={"tests": ["pytest"]},
        packages=find_packages(exclude=("examples", "tests")),
        package_data={package_name: ["config/*.py"]},
        entry_points={"console_scripts": ["stn-sim=stnoffload.cli:main"]},
    )
