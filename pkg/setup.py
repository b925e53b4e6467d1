from setuptools import find_packages, setup

with open("README.md", "r") as fh:
    long_description = fh.read()

with open("requirements.txt", "r") as fh:
    requirements = fh.readlines()

setup(
    name="faircut",
    python_requires=">=3.8,<3.13",
    use_scm_version=True,
    setup_requires=["setuptools_scm"],
    description="Solvers and exact oracles for fair graph-cut problems (SB-MinCC, DemFairCut, IndFairCut)",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={"faircut": ["schemas/*.json"]},
    install_requires=requirements,
    entry_points="""
    [console_scripts]
    faircut=faircut.cli:main
    """,
)
