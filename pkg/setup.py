#!/usr/bin/env python
import os
import os.path
from setuptools import setup, find_packages

version_file = os.path.join(os.path.dirname(__file__), "deltaloop", "VERSION")
with open(version_file) as f:
    version = f.read().strip()


setup(
    name="deltaloop",
    version=version,
    description="Circulating current and torque analysis for delta-wound PM synchronous machines",
    long_description="Circulating current and torque analysis for delta-wound PM synchronous machines",
    classifiers=[
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Topic :: Scientific/Engineering",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
    keywords="pmsm delta winding circulating current torque ripple",
    license="MIT",
    packages=find_packages(exclude=["ez_setup", "examples", "tests"]),
    include_package_data=True,
    package_data={"deltaloop": ["VERSION", "machines/*.json"]},
    zip_safe=True,
    python_requires=">=3.9",
    install_requires=[line.rstrip() for line in open(os.path.join(os.path.dirname(__file__), "requirements.txt"))],
    entry_points={
        "console_scripts": [
            "deltaloop=deltaloop.cli:cli",
        ],
    },
    test_suite="tests",
    tests_require=["pytest", "hypothesis"],
)
