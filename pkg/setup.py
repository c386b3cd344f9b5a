from setuptools import find_packages, setup

setup(
    name="entrofunc",
    version="0.1.0",
    description="Renyi entropy functional estimation with epsilon-coincidence U-statistics",
    author="Your Name",
    author_email="you@example.com",
    packages=find_packages(include=["entrofunc", "entrofunc.*"]),
    package_data={"entrofunc.presets": ["*.ini"]},
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.11.0",
        "pandas>=2.0.0",
        "pydantic>=2.0.0",
        "pydantic-settings>=2.0.0",
        "orjson>=3.8.0",
        "structlog>=23.0.0",
    ],
    extras_require={
        "dev": [
            "black",
            "mypy==1.10.0",
            "pytest",
            "pytest-cov",
            "ruff",
            "tox>=4.0.0",
        ]
    },
    entry_points={
        "console_scripts": [
            "entrofunc = entrofunc.cli:main",
        ],
    },
)
