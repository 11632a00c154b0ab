#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""The setup script."""
from setuptools import find_packages, setup

with open("README.rst") as readme_file:
    readme = readme_file.read()

with open("HISTORY.rst") as history_file:
    history = history_file.read()

requirements = [
    "Click>=7.0",
    "attrs>=19.2",
    "fs>=2.4.2",
    "numpy>=1.17",
    "scipy>=1.4",
]

# As in tox.ini, the test requirements live in requirements_dev.txt
test_requirements = open("requirements_dev.txt").read().split("\n")

setup(
    author="cpqbm developers",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Natural Language :: English",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.6",
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    description="Completely positive quantum Brownian motion in a dilute gas",
    entry_points={"console_scripts": ["cpqbm=cpqbm.cli:main"]},
    install_requires=requirements,
    license="MIT license",
    long_description=readme + "\n\n" + history,
    keywords="quantum brownian motion master equation lindblad",
    name="cpqbm",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    python_requires=">=3.6",
    tests_require=test_requirements,  # for setup.py test
    version="0.1.0",
    zip_safe=False,
)
