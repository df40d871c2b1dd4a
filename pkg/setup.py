from setuptools import find_packages, setup

setup(
    name="dpmilp-kit",
    version="0.1.0",
    description="Distributed primal decomposition for constraint-coupled MILPs, as a RAMP kit",
    package_dir={"": "external_imports"},
    packages=find_packages("external_imports", include=["dpmilp", "dpmilp.*"]),
    python_requires=">=3.8",
    install_requires=[
        "click",
        "joblib",
        "networkx",
        "numpy",
        "pandas",
        "PyYAML",
        "scipy",
        "tqdm",
    ],
    extras_require={"kit": ["ramp-workflow"], "test": ["pytest"]},
    entry_points={"console_scripts": ["dpmilp=dpmilp.cli:main"]},
)
