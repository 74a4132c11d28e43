from setuptools import find_packages, setup

setup(
    name="kitVop",
    version="0.1.0",
    packages=find_packages(exclude=["tests"]),
    description="kitVop",
    long_description=open("README.md", encoding="utf-8").read(),
    long_description_content_type="text/markdown",
    python_requires=">=3.9",
    install_requires=["numpy>=1.22", "scipy>=1.12"],
    extras_require={"test": ["pytest>=7", "hypothesis>=6"]},
    entry_points={"console_scripts": ["kitvop=kit_vop.cli:main"]},
)
